#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "same/common.hpp"
#include "same/experiment.hpp"

using namespace same;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig small_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.seed = 3;
    cfg.output_dir = out_dir;
    cfg.train_size = 900;
    cfg.test_size = 220;
    cfg.calib_size = 160;
    cfg.victim_arch = Arch::mlp;
    cfg.victim_train.epochs = 3;
    cfg.victim_train.learning_rate = 0.1;
    cfg.mae_arch.embed_dim = 32;
    cfg.mae_arch.depth = 2;
    cfg.mae_arch.heads = 2;
    cfg.mae_arch.decoder_depth = 1;
    cfg.mae_train.epochs = 8;
    cfg.mae_train.warmup_epochs = 2;
    cfg.mae_train.learning_rate = 3e-3;
    cfg.aux_train.epochs = 6;
    cfg.aux_train.learning_rate = 0.3;
    cfg.defenses = {"same", "same-x"};
    AttackConfig noise;
    noise.kind = AttackKind::dfme;
    noise.dfme_mode = DfmeMode::noise;
    noise.budget = 150;
    noise.seed = 21;
    cfg.attacks = {noise};
    cfg.ratios = {0.3, 0.6};
    return cfg;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("config file round trip preserves the fingerprint") {
    auto dir = fresh_dir("same_test_expcfg");
    auto cfg = small_config((dir / "run").string());
    cfg.save_file((dir / "config.json").string());
    auto loaded = ExperimentConfig::load_file((dir / "config.json").string());
    CHECK(loaded.fingerprint() == cfg.fingerprint());
    CHECK(loaded.attacks.size() == 1);
    CHECK(loaded.ratios == cfg.ratios);
}

TEST_CASE("experiment validation errors") {
    auto cfg = small_config((fs::temp_directory_path() / "same_test_experr").string());
    cfg.defenses = {"voodoo"};
    CHECK_THROWS_AS(run_experiment(cfg), ValueError);
    cfg = small_config(cfg.output_dir);
    cfg.ratios = {1.5};
    CHECK_THROWS_AS(run_experiment(cfg), ValueError);
    cfg = small_config(cfg.output_dir);
    cfg.attacks.clear();
    CHECK_THROWS_AS(run_experiment(cfg), ValueError);
}

TEST_CASE("experiment determinism, resumability, and report formats") {
    auto dir_a = fresh_dir("same_test_exp_a");
    auto dir_b = fresh_dir("same_test_exp_b");

    auto cfg_a = small_config(dir_a.string());
    auto report_a = run_experiment(cfg_a);
    auto json_a = read_file((dir_a / "report.json").string());

    // Cold second run in a fresh directory: byte-identical canonical JSON.
    auto cfg_b = small_config(dir_b.string());
    auto report_b = run_experiment(cfg_b);
    auto json_b = read_file((dir_b / "report.json").string());
    CHECK(json_a == json_b);

    // Resumed run: keep checkpoints, drop the report, rerun in place.
    fs::remove(dir_a / "report.json");
    auto report_c = run_experiment(cfg_a);
    CHECK(read_file((dir_a / "report.json").string()) == json_b);

    // Partial resume: only the victim checkpoint survives the "interruption".
    auto dir_c = fresh_dir("same_test_exp_c");
    fs::copy(dir_a / "victim.json", dir_c / "victim.json");
    fs::copy(dir_a / "victim.bin", dir_c / "victim.bin");
    auto cfg_c = small_config(dir_c.string());
    run_experiment(cfg_c);
    CHECK(read_file((dir_c / "report.json").string()) == json_b);

    // JSON -> load -> JSON round trip is byte-identical.
    auto loaded = load_report((dir_b / "report.json").string());
    std::string redumped = loaded.canonical_json().dump(2) + "\n";
    CHECK(redumped == json_b);

    // CSV: one row per (defense, attack, budget, ratio) plus header.
    auto csv = read_file((dir_b / "report.csv").string());
    long lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + 2 * 1 * 1 * 2);  // defenses * attacks * budgets * ratios

    // Markdown renders the metric grid.
    auto md = read_file((dir_b / "report.md").string());
    CHECK(md.find("AUROC") != std::string::npos);
    CHECK(md.find("AUPR") != std::string::npos);
    CHECK(md.find("FPR95") != std::string::npos);

    // Rows carry percent-scaled metrics.
    REQUIRE(report_a.rows.size() == 4);
    for (const auto& r : report_a.rows) {
        CHECK(r.auroc >= 0.0);
        CHECK(r.auroc <= 100.0);
        CHECK(r.aupr >= 0.0);
        CHECK(r.aupr <= 100.0);
    }
}

TEST_CASE("same-x defense equals same with alpha forced to one") {
    auto dir = fresh_dir("same_test_exp_ablate");
    auto cfg = small_config(dir.string());
    cfg.alpha = 1.0;  // combined score degenerates to the reconstruction term
    cfg.defenses = {"same", "same-x"};
    auto report = run_experiment(cfg);
    REQUIRE(report.rows.size() == 4);
    for (double ratio : cfg.ratios) {
        const ReportRow *same_row = nullptr, *x_row = nullptr;
        for (const auto& r : report.rows) {
            if (r.ratio != ratio) continue;
            if (r.defense == "same") same_row = &r;
            if (r.defense == "same-x") x_row = &r;
        }
        REQUIRE(same_row);
        REQUIRE(x_row);
        CHECK(same_row->auroc == x_row->auroc);
        CHECK(same_row->aupr == x_row->aupr);
        CHECK(same_row->fpr95 == x_row->fpr95);
        CHECK(same_row->fpr90 == x_row->fpr90);
    }
}

TEST_CASE("report format parsing") {
    auto f = parse_report_formats("json,csv,markdown");
    CHECK(f.size() == 3);
    CHECK(parse_report_formats("md").count(ReportFormat::markdown) == 1);
    CHECK_THROWS_AS(parse_report_formats("yaml"), ValueError);
}
