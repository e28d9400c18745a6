#include "same/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "same/archive.hpp"
#include "same/auxiliary.hpp"
#include "same/common.hpp"
#include "same/metrics.hpp"
#include "same/sha256.hpp"
#include "same/synthetic.hpp"

namespace same {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

static json train_config_json(const TrainConfig& t) {
    return json{{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"seed", t.seed},
                {"loss", t.loss == LossKind::cross_entropy ? "cross-entropy" : "mse-to-soft-targets"}};
}

static TrainConfig train_config_from(const json& j, const TrainConfig& defaults) {
    TrainConfig t = defaults;
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.seed = j.value("seed", t.seed);
    std::string loss = j.value("loss", t.loss == LossKind::cross_entropy ? "cross-entropy" : "mse-to-soft-targets");
    if (loss == "cross-entropy") {
        t.loss = LossKind::cross_entropy;
    } else if (loss == "mse-to-soft-targets") {
        t.loss = LossKind::mse_soft_targets;
    } else {
        throw ValueError("config: unknown loss kind " + loss);
    }
    return t;
}

static json attack_config_json(const AttackConfig& a) {
    json j{{"kind", attack_kind_name(a.kind)}, {"budget", a.budget}, {"seed", a.seed}};
    switch (a.kind) {
        case AttackKind::knockoff:
            j["strategy"] = a.knockoff_strategy == KnockoffStrategy::random ? "random" : "balanced";
            j["proxy"] = a.proxy_id.empty() ? "glyph-letters" : a.proxy_id;
            break;
        case AttackKind::jbda:
            j["seed_count"] = a.jbda_seed_count;
            j["step"] = a.jbda_step;
            j["substitute_epochs"] = a.jbda_substitute_cfg.epochs;
            break;
        case AttackKind::dfme:
            j["mode"] = a.dfme_mode == DfmeMode::noise ? "noise" : "generator";
            j["iterations"] = a.dfme_iterations;
            break;
    }
    return j;
}

static AttackConfig attack_config_from(const json& j) {
    AttackConfig a;
    a.kind = parse_attack_kind(j.at("kind").get<std::string>());
    a.budget = j.value("budget", 1000);
    a.seed = j.value("seed", std::uint64_t{0});
    switch (a.kind) {
        case AttackKind::knockoff: {
            std::string strategy = j.value("strategy", "random");
            if (strategy == "random") {
                a.knockoff_strategy = KnockoffStrategy::random;
            } else if (strategy == "balanced") {
                a.knockoff_strategy = KnockoffStrategy::balanced;
            } else {
                throw ValueError("config: unknown knockoff strategy " + strategy);
            }
            a.proxy_id = j.value("proxy", "glyph-letters");
            break;
        }
        case AttackKind::jbda:
            a.jbda_seed_count = j.value("seed_count", 200);
            a.jbda_step = j.value("step", 0.1);
            a.jbda_substitute_cfg.epochs = j.value("substitute_epochs", 5);
            break;
        case AttackKind::dfme: {
            std::string mode = j.value("mode", "noise");
            if (mode == "noise") {
                a.dfme_mode = DfmeMode::noise;
            } else if (mode == "generator") {
                a.dfme_mode = DfmeMode::generator;
            } else {
                throw ValueError("config: unknown dfme mode " + mode);
            }
            a.dfme_iterations = j.value("iterations", 200);
            break;
        }
    }
    return a;
}

json ExperimentConfig::to_json() const {
    return json{
        {"version", version},
        {"seed", seed},
        {"output_dir", output_dir},
        {"data",
         {{"train_size", train_size},
          {"test_size", test_size},
          {"calib_size", calib_size},
          {"shape", {shape.channels, shape.height, shape.width}}}},
        {"victim", {{"arch", arch_name(victim_arch)}, {"train", train_config_json(victim_train)}}},
        {"mae",
         {{"patch_size", mae_arch.patch_size},
          {"embed_dim", mae_arch.embed_dim},
          {"depth", mae_arch.depth},
          {"heads", mae_arch.heads},
          {"decoder_depth", mae_arch.decoder_depth},
          {"epochs", mae_train.epochs},
          {"warmup_epochs", mae_train.warmup_epochs},
          {"batch_size", mae_train.batch_size},
          {"learning_rate", mae_train.learning_rate},
          {"mask_ratio", mae_train.mask_ratio},
          {"seed", mae_train.seed}}},
        {"aux", train_config_json(aux_train)},
        {"detector",
         {{"alpha", alpha}, {"target_fpr", target_fpr}, {"score_mask_ratio", score_mask_ratio}}},
        {"defenses", defenses},
        {"baselines",
         {{"oe_gamma", oe_gamma},
          {"edm_gamma", edm_gamma},
          {"edm_models", edm_models},
          {"outlier_corpus", outlier_corpus},
          {"train", train_config_json(baseline_train)}}},
        {"attacks", [&] {
             json arr = json::array();
             for (const auto& a : attacks) arr.push_back(attack_config_json(a));
             return arr;
         }()},
        {"ratios", ratios},
    };
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    if (j.value("version", 1) != 1) throw FormatError("config: unsupported version");
    c.seed = j.value("seed", std::uint64_t{1});
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        c.train_size = d.value("train_size", c.train_size);
        c.test_size = d.value("test_size", c.test_size);
        c.calib_size = d.value("calib_size", c.calib_size);
        if (d.contains("shape")) {
            auto s = d.at("shape");
            c.shape = Shape{s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>()};
        }
    }
    if (j.contains("victim")) {
        c.victim_arch = parse_arch(j.at("victim").value("arch", "conv3"));
        if (j.at("victim").contains("train")) {
            c.victim_train = train_config_from(j.at("victim").at("train"), c.victim_train);
        }
    }
    if (j.contains("mae")) {
        const auto& m = j.at("mae");
        c.mae_arch.patch_size = m.value("patch_size", c.mae_arch.patch_size);
        c.mae_arch.embed_dim = m.value("embed_dim", c.mae_arch.embed_dim);
        c.mae_arch.depth = m.value("depth", c.mae_arch.depth);
        c.mae_arch.heads = m.value("heads", c.mae_arch.heads);
        c.mae_arch.decoder_depth = m.value("decoder_depth", c.mae_arch.decoder_depth);
        c.mae_train.epochs = m.value("epochs", c.mae_train.epochs);
        c.mae_train.warmup_epochs = m.value("warmup_epochs", c.mae_train.warmup_epochs);
        c.mae_train.batch_size = m.value("batch_size", c.mae_train.batch_size);
        c.mae_train.learning_rate = m.value("learning_rate", c.mae_train.learning_rate);
        c.mae_train.mask_ratio = m.value("mask_ratio", c.mae_train.mask_ratio);
        c.mae_train.seed = m.value("seed", c.mae_train.seed);
    }
    if (j.contains("aux")) c.aux_train = train_config_from(j.at("aux"), c.aux_train);
    if (j.contains("detector")) {
        c.alpha = j.at("detector").value("alpha", c.alpha);
        c.target_fpr = j.at("detector").value("target_fpr", c.target_fpr);
        c.score_mask_ratio = j.at("detector").value("score_mask_ratio", c.score_mask_ratio);
    }
    c.defenses = j.value("defenses", c.defenses);
    if (j.contains("baselines")) {
        const auto& b = j.at("baselines");
        c.oe_gamma = b.value("oe_gamma", c.oe_gamma);
        c.edm_gamma = b.value("edm_gamma", c.edm_gamma);
        c.edm_models = b.value("edm_models", c.edm_models);
        c.outlier_corpus = b.value("outlier_corpus", c.outlier_corpus);
        if (b.contains("train")) c.baseline_train = train_config_from(b.at("train"), c.baseline_train);
    }
    if (j.contains("attacks")) {
        c.attacks.clear();
        for (const auto& a : j.at("attacks")) c.attacks.push_back(attack_config_from(a));
    }
    c.ratios = j.value("ratios", c.ratios);
    return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("config: bad JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

void ExperimentConfig::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << to_json().dump(2) << "\n";
}

std::string ExperimentConfig::fingerprint() const {
    auto s = to_json().dump();
    return sha256_hex(s);
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

static double pct(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

json ExperimentReport::canonical_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        rows_json.push_back(json{{"defense", r.defense},
                                 {"attack", r.attack},
                                 {"budget", r.budget},
                                 {"ratio", r.ratio},
                                 {"auroc", r.auroc},
                                 {"aupr", r.aupr},
                                 {"fpr95", r.fpr95},
                                 {"fpr90", r.fpr90},
                                 {"negatives", r.negatives},
                                 {"positives", r.positives}});
    }
    return json{{"version", version},
                {"seed", seed},
                {"config", config_echo},
                {"victim_accuracy", victim_accuracy_percent},
                {"rows", rows_json}};
}

std::set<ReportFormat> parse_report_formats(const std::string& csv_list) {
    std::set<ReportFormat> out;
    std::size_t start = 0;
    while (start <= csv_list.size()) {
        auto end = csv_list.find(',', start);
        std::string tok = csv_list.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (tok == "json") {
            out.insert(ReportFormat::json);
        } else if (tok == "csv") {
            out.insert(ReportFormat::csv);
        } else if (tok == "markdown" || tok == "md") {
            out.insert(ReportFormat::markdown);
        } else if (!tok.empty()) {
            throw ValueError("unknown report format: " + tok);
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

static std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::vector<std::string> emit_report(const ExperimentReport& report, const std::string& dir,
                                     const std::set<ReportFormat>& formats) {
    fs::create_directories(dir);
    std::vector<std::string> written;

    if (formats.count(ReportFormat::json)) {
        auto path = (fs::path(dir) / "report.json").string();
        std::ofstream out(path);
        if (!out) throw IoError("emit_report: cannot write " + path);
        out << report.canonical_json().dump(2) << "\n";
        written.push_back(path);

        auto tpath = (fs::path(dir) / "timings.json").string();
        std::ofstream tout(tpath);
        tout << json{{"runtime_seconds", report.runtime_seconds}}.dump(2) << "\n";
        written.push_back(tpath);
    }
    if (formats.count(ReportFormat::csv)) {
        auto path = (fs::path(dir) / "report.csv").string();
        std::ofstream out(path);
        if (!out) throw IoError("emit_report: cannot write " + path);
        out << "defense,attack,budget,ratio,auroc,aupr,fpr95,fpr90,negatives,positives\n";
        for (const auto& r : report.rows) {
            out << r.defense << ',' << r.attack << ',' << r.budget << ',' << r.ratio << ','
                << fmt2(r.auroc) << ',' << fmt2(r.aupr) << ',' << fmt2(r.fpr95) << ',' << fmt2(r.fpr90)
                << ',' << r.negatives << ',' << r.positives << "\n";
        }
        written.push_back(path);
    }
    if (formats.count(ReportFormat::markdown)) {
        auto path = (fs::path(dir) / "report.md").string();
        std::ofstream out(path);
        if (!out) throw IoError("emit_report: cannot write " + path);
        out << "# Detection results\n\n";
        out << "Victim accuracy: " << fmt2(report.victim_accuracy_percent) << "%\n\n";

        // Table-shaped grid: one row per (budget, defense, ratio), metric
        // triple per attack.
        std::vector<std::string> attacks;
        for (const auto& r : report.rows) {
            if (std::find(attacks.begin(), attacks.end(), r.attack) == attacks.end()) {
                attacks.push_back(r.attack);
            }
        }
        out << "| B | Method | Ratio |";
        for (const auto& a : attacks) out << ' ' << a << " AUROC | " << a << " AUPR | " << a << " FPR95 |";
        out << "\n|---|--------|-------|";
        for (std::size_t i = 0; i < attacks.size(); ++i) out << "---|---|---|";
        out << "\n";
        std::set<std::tuple<int, std::string, double>> keys;
        for (const auto& r : report.rows) keys.insert({r.budget, r.defense, r.ratio});
        for (const auto& [budget, defense, ratio] : keys) {
            out << "| " << budget << " | " << defense << " | " << ratio << " |";
            for (const auto& a : attacks) {
                bool found = false;
                for (const auto& r : report.rows) {
                    if (r.budget == budget && r.defense == defense && r.ratio == ratio && r.attack == a) {
                        out << ' ' << fmt2(r.auroc) << " | " << fmt2(r.aupr) << " | " << fmt2(r.fpr95)
                            << " |";
                        found = true;
                        break;
                    }
                }
                if (!found) out << " - | - | - |";
            }
            out << "\n";
        }
        written.push_back(path);
    }
    return written;
}

ExperimentReport load_report(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw IoError("load_report: cannot open " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("load_report: bad JSON: " + std::string(e.what()));
    }
    ExperimentReport r;
    r.version = j.value("version", 1);
    r.seed = j.value("seed", std::uint64_t{0});
    r.config_echo = j.value("config", json::object());
    r.victim_accuracy_percent = j.value("victim_accuracy", 0.0);
    for (const auto& row : j.value("rows", json::array())) {
        ReportRow rr;
        rr.defense = row.value("defense", "");
        rr.attack = row.value("attack", "");
        rr.budget = row.value("budget", 0);
        rr.ratio = row.value("ratio", 0.0);
        rr.auroc = row.value("auroc", 0.0);
        rr.aupr = row.value("aupr", 0.0);
        rr.fpr95 = row.value("fpr95", 0.0);
        rr.fpr90 = row.value("fpr90", 0.0);
        rr.negatives = row.value("negatives", 0);
        rr.positives = row.value("positives", 0);
        r.rows.push_back(std::move(rr));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

struct ScoredQuery {
    double recon = 0.0;
    double deviation = 0.0;
};

LabeledDataset corpus_by_id(const std::string& id, int count, Shape shape, const RngHandle& rng) {
    if (id == "glyph-digits") return render_glyph_dataset(GlyphSet::digits, count, shape, rng);
    if (id == "glyph-letters") return render_glyph_dataset(GlyphSet::letters, count, shape, rng);
    if (id == "shifted-digits") return make_synthetic_corpus(SyntheticKind::shifted_digits, count, shape, rng);
    if (id == "noise") return make_synthetic_corpus(SyntheticKind::noise, count, shape, rng);
    throw ValueError("unknown corpus id: " + id);
}

// Deterministic subsample of `count` items.
std::vector<std::size_t> pick(std::size_t available, std::size_t count, const RngHandle& rng) {
    if (count > available) throw ValueError("pick: not enough samples available");
    std::vector<std::size_t> idx(available);
    for (std::size_t i = 0; i < available; ++i) idx[i] = i;
    auto g = rng.engine();
    shuffle_indices(idx, g);
    idx.resize(count);
    return idx;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (cfg.ratios.empty()) throw ValueError("run_experiment: no ratios");
    for (double r : cfg.ratios) {
        if (!(r > 0.0 && r < 1.0)) throw ValueError("run_experiment: ratios must be in (0,1)");
    }
    if (cfg.attacks.empty()) throw ValueError("run_experiment: no attacks configured");
    for (const auto& d : cfg.defenses) {
        if (d != "same" && d != "same-x" && d != "same-y" && d != "oe" && d != "edm") {
            throw ValueError("run_experiment: unknown defense " + d);
        }
    }

    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);
    RngHandle root(cfg.seed, "experiment");

    // ---- data -------------------------------------------------------------
    auto digits = render_glyph_dataset(GlyphSet::digits, cfg.train_size + cfg.test_size + cfg.calib_size,
                                       cfg.shape, root.derive("digits"));
    const double n_total = static_cast<double>(digits.size());
    auto splits = split_dataset(
        digits,
        {cfg.train_size / n_total, cfg.test_size / n_total, cfg.calib_size / n_total},
        root.derive("split"));
    LabeledDataset train = std::move(splits[0]);
    LabeledDataset test = std::move(splits[1]);
    LabeledDataset calib = std::move(splits[2]);

    // ---- victim (cached) ----------------------------------------------------
    TrainConfig victim_cfg = cfg.victim_train;
    victim_cfg.seed = cfg.seed * 1000 + 1;
    Classifier victim;
    const std::string victim_base = (out / "victim").string();
    bool victim_loaded = false;
    if (fs::exists(victim_base + ".json")) {
        try {
            auto cached = Classifier::load(victim_base);
            if (cached.manifest().seed == victim_cfg.seed &&
                cached.manifest().epochs == victim_cfg.epochs &&
                cached.manifest().dataset_fingerprint == train.fingerprint()) {
                victim = std::move(cached);
                victim_loaded = true;
            }
        } catch (const Error&) {
            // fall through to retraining
        }
    }
    if (!victim_loaded) {
        victim = train_classifier(cfg.victim_arch, train, victim_cfg);
        victim.save(victim_base);
    }
    const double victim_accuracy = evaluate_accuracy(victim, test);

    // ---- autoencoder (cached) ----------------------------------------------
    MaeTrainConfig mae_cfg = cfg.mae_train;
    mae_cfg.seed = cfg.seed * 1000 + 2;
    MaeModel mae;
    const std::string mae_base = (out / "mae").string();
    bool mae_loaded = false;
    if (fs::exists(mae_base + ".json")) {
        try {
            auto cached = MaeModel::load(mae_base);
            if (cached.train_seed() == mae_cfg.seed &&
                static_cast<int>(cached.loss_curve().size()) == mae_cfg.epochs &&
                cached.dataset_fingerprint() == train.fingerprint()) {
                mae = std::move(cached);
                mae_loaded = true;
            }
        } catch (const Error&) {
        }
    }
    if (!mae_loaded) {
        mae = train_mae(train, cfg.mae_arch, mae_cfg);
        mae.save(mae_base);
    }

    // ---- auxiliary (cached) --------------------------------------------------
    const double score_ratio = cfg.score_mask_ratio >= 0.0 ? cfg.score_mask_ratio : cfg.mae_train.mask_ratio;
    mae.set_default_mask_ratio(score_ratio);
    TrainConfig aux_cfg = cfg.aux_train;
    aux_cfg.seed = cfg.seed * 1000 + 3;
    AuxiliaryModel aux;
    const std::string aux_base = (out / "aux").string();
    auto recon = build_reconstructed_dataset(mae, train, root.derive("aux-recon"));
    bool aux_loaded = false;
    if (fs::exists(aux_base + ".json")) {
        try {
            auto cached = AuxiliaryModel::load(aux_base);
            if (cached.victim_hash == victim.weight_hash() && cached.mae_hash == mae.weight_hash() &&
                cached.seed == aux_cfg.seed &&
                cached.model.manifest().dataset_fingerprint == recon.fingerprint()) {
                aux = std::move(cached);
                aux_loaded = true;
            }
        } catch (const Error&) {
        }
    }
    if (!aux_loaded) {
        aux = train_auxiliary(victim, mae, train, recon, aux_cfg);
        aux.save(aux_base);
    }

    // ---- detector -------------------------------------------------------------
    DetectorConfig det_cfg;
    det_cfg.alpha = cfg.alpha;
    det_cfg.score_mask_ratio = score_ratio;
    Detector detector(victim, mae, aux, det_cfg);
    detector.calibrate(calib, cfg.target_fpr);
    detector.set_checkpoint_paths(victim_base, mae_base, aux_base);
    detector.save_bundle((out / "detector.json").string());

    // ---- baselines --------------------------------------------------------------
    bool want_oe = std::find(cfg.defenses.begin(), cfg.defenses.end(), "oe") != cfg.defenses.end();
    bool want_edm = std::find(cfg.defenses.begin(), cfg.defenses.end(), "edm") != cfg.defenses.end();
    LabeledDataset outliers;
    if (want_oe || want_edm) {
        outliers = corpus_by_id(cfg.outlier_corpus, cfg.train_size / 2, cfg.shape, root.derive("outliers"));
    }
    OeModel oe;
    if (want_oe) {
        TrainConfig oc = cfg.baseline_train;
        oc.seed = cfg.seed * 1000 + 4;
        oe = train_oe(train, outliers, cfg.oe_gamma, oc, cfg.victim_arch);
    }
    EdmEnsemble edm;
    if (want_edm) {
        TrainConfig ec = cfg.baseline_train;
        ec.seed = cfg.seed * 1000 + 5;
        edm = train_edm(train, outliers, cfg.edm_models, cfg.edm_gamma, ec, cfg.victim_arch);
    }

    // ---- attacks (cached in the tensor archive) -----------------------------------
    std::vector<QuerySet> query_sets;
    for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
        AttackConfig acfg = cfg.attacks[ai];
        acfg.seed = acfg.seed + cfg.seed * 1000;
        const std::string qbase = (out / ("queries-" + attack_kind_name(acfg.kind) + "-" +
                                          std::to_string(ai)))
                                      .string();
        const std::string provenance = attack_config_json(acfg).dump();
        if (fs::exists(qbase + ".json") && archive_provenance(qbase) == provenance) {
            QuerySet qs;
            auto stored = load_dataset_archive(qbase);
            qs.samples = std::move(stored.samples);
            qs.provenance = acfg;
            query_sets.push_back(std::move(qs));
            continue;
        }

        QuerySet qs;
        switch (acfg.kind) {
            case AttackKind::knockoff: {
                auto proxy = corpus_by_id(acfg.proxy_id.empty() ? "glyph-letters" : acfg.proxy_id,
                                          std::max(acfg.budget * 2, acfg.budget + 100), cfg.shape,
                                          root.derive("proxy/" + std::to_string(ai)));
                qs = knockoff_select(proxy, acfg);
                break;
            }
            case AttackKind::jbda: {
                auto seeds = render_glyph_dataset(GlyphSet::digits, acfg.jbda_seed_count, cfg.shape,
                                                  root.derive("jbda-seeds/" + std::to_string(ai)));
                Classifier substitute(cfg.victim_arch, cfg.shape, victim.num_classes(),
                                      RngHandle(acfg.seed, "jbda-sub-init"));
                qs = jbda_augment(seeds, substitute, oracle_of(victim), acfg);
                break;
            }
            case AttackKind::dfme:
                qs = dfme_synthesize(oracle_of(victim), cfg.shape, acfg);
                break;
        }
        LabeledDataset to_store;
        to_store.name = qbase;
        to_store.num_classes = 1;
        to_store.samples = qs.samples;
        to_store.labels.assign(qs.samples.size(), 0);
        save_dataset_archive(to_store, qbase, provenance);
        query_sets.push_back(std::move(qs));
    }

    // ---- scoring -------------------------------------------------------------------
    // Raw per-term errors for the detection triple are computed once per
    // query; each defense view combines them differently.
    auto score_raw = [&](const ImageTensor& x) {
        auto record = detector.score(x);
        return ScoredQuery{record.recon_error, record.deviation_error};
    };
    std::vector<ScoredQuery> clean_raw(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) clean_raw[i] = score_raw(test.samples[i]);
    std::vector<double> clean_oe, clean_edm;
    if (want_oe) {
        clean_oe.resize(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) clean_oe[i] = oe_score(oe, test.samples[i]);
    }
    if (want_edm) {
        clean_edm.resize(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) clean_edm[i] = edm_score(edm, test.samples[i]);
    }

    ExperimentReport report;
    report.version = 1;
    report.seed = cfg.seed;
    report.config_echo = cfg.to_json();
    // Filesystem placement does not identify the experiment; keep the
    // canonical report byte-stable across output directories.
    report.config_echo.erase("output_dir");
    report.victim_accuracy_percent = pct(victim_accuracy);

    for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
        const auto& qs = query_sets[ai];
        std::vector<ScoredQuery> attack_raw(qs.size());
        for (std::size_t i = 0; i < qs.size(); ++i) attack_raw[i] = score_raw(qs.samples[i]);
        std::vector<double> attack_oe, attack_edm;
        if (want_oe) {
            attack_oe.resize(qs.size());
            for (std::size_t i = 0; i < qs.size(); ++i) attack_oe[i] = oe_score(oe, qs.samples[i]);
        }
        if (want_edm) {
            attack_edm.resize(qs.size());
            for (std::size_t i = 0; i < qs.size(); ++i) attack_edm[i] = edm_score(edm, qs.samples[i]);
        }

        for (double ratio : cfg.ratios) {
            // Query stream: (1-ratio) clean held-out + ratio attack samples,
            // as large as the pools allow.
            std::size_t n_stream = std::min(
                static_cast<std::size_t>(std::floor(test.size() / (1.0 - ratio))),
                static_cast<std::size_t>(std::floor(qs.size() / ratio)));
            std::size_t n_pos = static_cast<std::size_t>(std::llround(n_stream * ratio));
            std::size_t n_neg = n_stream - n_pos;
            n_pos = std::min(n_pos, qs.size());
            n_neg = std::min(n_neg, test.size());
            if (n_pos == 0 || n_neg == 0) throw ValueError("run_experiment: ratio leaves an empty class");

            auto neg_idx = pick(test.size(), n_neg,
                                root.derive("mix-neg/" + std::to_string(ai) + "/" + std::to_string(ratio)));
            auto pos_idx = pick(qs.size(), n_pos,
                                root.derive("mix-pos/" + std::to_string(ai) + "/" + std::to_string(ratio)));

            for (const auto& defense : cfg.defenses) {
                std::vector<double> neg_scores, pos_scores;
                neg_scores.reserve(n_neg);
                pos_scores.reserve(n_pos);
                DetectorConfig view = detector.config();
                if (defense == "same-x") view.alpha = 1.0;
                if (defense == "same-y") view.alpha = 0.0;
                for (std::size_t i : neg_idx) {
                    if (defense == "oe") {
                        neg_scores.push_back(clean_oe[i]);
                    } else if (defense == "edm") {
                        neg_scores.push_back(clean_edm[i]);
                    } else {
                        neg_scores.push_back(combine_score(clean_raw[i].recon, clean_raw[i].deviation, view));
                    }
                }
                for (std::size_t i : pos_idx) {
                    if (defense == "oe") {
                        pos_scores.push_back(attack_oe[i]);
                    } else if (defense == "edm") {
                        pos_scores.push_back(attack_edm[i]);
                    } else {
                        pos_scores.push_back(
                            combine_score(attack_raw[i].recon, attack_raw[i].deviation, view));
                    }
                }

                ScoredPopulation pop(pos_scores, neg_scores);
                ReportRow row;
                row.defense = defense;
                row.attack = attack_kind_name(qs.provenance.kind);
                if (qs.provenance.kind == AttackKind::dfme) {
                    row.attack += qs.provenance.dfme_mode == DfmeMode::noise ? "-noise" : "-generator";
                }
                row.budget = qs.provenance.budget;
                row.ratio = ratio;
                row.auroc = pct(auroc(pop));
                row.aupr = pct(aupr(pop));
                row.fpr95 = pct(fpr_at_tpr(pop, 0.95));
                row.fpr90 = pct(fpr_at_tpr(pop, 0.90));
                row.negatives = static_cast<int>(n_neg);
                row.positives = static_cast<int>(n_pos);
                report.rows.push_back(std::move(row));
            }
        }
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    emit_report(report, cfg.output_dir, {ReportFormat::json, ReportFormat::csv, ReportFormat::markdown});
    return report;
}

}  // namespace same
