#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace same::nn {

// Dense row-major matrix. Activations are batch-first (rows = batch or
// batch*tokens); weights are (in, out).
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(int r, int c, T fill = T(0)) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    T* row(int i) { return v.data() + static_cast<std::size_t>(i) * cols; }
    const T* row(int i) const { return v.data() + static_cast<std::size_t>(i) * cols; }
    T& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
    T operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }

    std::size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(static_cast<std::size_t>(r) * c, T(0));
    }
};

// C = (or +=) A * B. Row-major i-k-j kernel with 4-row blocking; the inner
// j loop is contiguous and auto-vectorizes.
template <typename T>
void gemm_nn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool accumulate = false) {
    assert(A.cols == B.rows);
    if (C.rows != A.rows || C.cols != B.cols) C.resize(A.rows, B.cols);
    if (!accumulate) C.zero();
    const int M = A.rows, K = A.cols, N = B.cols;
    int i = 0;
    for (; i + 4 <= M; i += 4) {
        const T* __restrict a0 = A.row(i);
        const T* __restrict a1 = A.row(i + 1);
        const T* __restrict a2 = A.row(i + 2);
        const T* __restrict a3 = A.row(i + 3);
        T* __restrict c0 = C.row(i);
        T* __restrict c1 = C.row(i + 1);
        T* __restrict c2 = C.row(i + 2);
        T* __restrict c3 = C.row(i + 3);
        for (int k = 0; k < K; ++k) {
            const T* __restrict b = B.row(k);
            const T f0 = a0[k], f1 = a1[k], f2 = a2[k], f3 = a3[k];
            for (int j = 0; j < N; ++j) {
                c0[j] += f0 * b[j];
                c1[j] += f1 * b[j];
                c2[j] += f2 * b[j];
                c3[j] += f3 * b[j];
            }
        }
    }
    for (; i < M; ++i) {
        const T* __restrict a = A.row(i);
        T* __restrict c = C.row(i);
        for (int k = 0; k < K; ++k) {
            const T f = a[k];
            const T* __restrict b = B.row(k);
            for (int j = 0; j < N; ++j) c[j] += f * b[j];
        }
    }
}

// C = (or +=) A^T * B; A is (K, M), result (M, N).
template <typename T>
void gemm_tn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool accumulate = false) {
    assert(A.rows == B.rows);
    if (C.rows != A.cols || C.cols != B.cols) C.resize(A.cols, B.cols);
    if (!accumulate) C.zero();
    const int K = A.rows, M = A.cols, N = B.cols;
    for (int k = 0; k < K; ++k) {
        const T* __restrict a = A.row(k);
        const T* __restrict b = B.row(k);
        for (int i = 0; i < M; ++i) {
            const T f = a[i];
            T* __restrict c = C.row(i);
            for (int j = 0; j < N; ++j) c[j] += f * b[j];
        }
    }
}

// C = (or +=) A * B^T; B is (N, K), result (M, N). B is transposed into a
// scratch buffer so the whole product runs through the vectorized kernel;
// the copy is negligible next to the multiply.
template <typename T>
void gemm_nt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool accumulate = false) {
    assert(A.cols == B.cols);
    thread_local Mat<T> scratch;
    scratch.resize(B.cols, B.rows);
    for (int j = 0; j < B.rows; ++j) {
        const T* __restrict src = B.row(j);
        for (int k = 0; k < B.cols; ++k) scratch(k, j) = src[k];
    }
    gemm_nn(A, scratch, C, accumulate);
}

template <typename T>
void add_row_broadcast(Mat<T>& X, const Mat<T>& bias) {
    assert(bias.rows == 1 && bias.cols == X.cols);
    for (int i = 0; i < X.rows; ++i) {
        T* __restrict x = X.row(i);
        const T* __restrict b = bias.row(0);
        for (int j = 0; j < X.cols; ++j) x[j] += b[j];
    }
}

template <typename T>
void col_sum(const Mat<T>& X, Mat<T>& out, bool accumulate = false) {
    if (out.rows != 1 || out.cols != X.cols) out.resize(1, X.cols);
    if (!accumulate) out.zero();
    for (int i = 0; i < X.rows; ++i) {
        const T* __restrict x = X.row(i);
        T* __restrict o = out.row(0);
        for (int j = 0; j < X.cols; ++j) o[j] += x[j];
    }
}

}  // namespace same::nn
