// Command-line front end: data preparation, training, attack generation,
// detector calibration and scoring, experiment runs, serving, and report
// rendering. Every command is deterministic given its --seed.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "same/archive.hpp"
#include "same/attacks.hpp"
#include "same/auxiliary.hpp"
#include "same/baselines.hpp"
#include "same/common.hpp"
#include "same/experiment.hpp"
#include "same/gateway.hpp"
#include "same/idx.hpp"
#include "same/synthetic.hpp"

using namespace same;
namespace fs = std::filesystem;

namespace {

Shape parse_shape(const std::string& spec) {
    Shape s;
    if (std::sscanf(spec.c_str(), "%d,%d,%d", &s.channels, &s.height, &s.width) != 3) {
        throw ValueError("shape must be c,h,w");
    }
    return s;
}

LabeledDataset load_corpus(const std::string& ref, int count, Shape shape, const RngHandle& rng) {
    // Either a named synthetic corpus or an archive base path.
    if (ref == "glyph-digits" || ref == "glyph-letters" || ref == "noise" || ref == "shifted-digits") {
        if (ref == "glyph-digits") return render_glyph_dataset(GlyphSet::digits, count, shape, rng);
        if (ref == "glyph-letters") return render_glyph_dataset(GlyphSet::letters, count, shape, rng);
        return make_synthetic_corpus(parse_synthetic_kind(ref), count, shape, rng);
    }
    return load_dataset_archive(ref);
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sample-reconstruction defense toolkit for model-extraction queries"};
    app.require_subcommand(1);

    // ---- data ---------------------------------------------------------------
    auto* data = app.add_subcommand("data", "dataset import and synthesis");
    data->require_subcommand(1);

    std::string images_path, labels_path, out_base;
    auto* fetch = data->add_subcommand("fetch", "import an IDX image/label pair into the tensor archive");
    fetch->add_option("--images", images_path, "IDX image file")->required();
    fetch->add_option("--labels", labels_path, "IDX label file")->required();
    fetch->add_option("--out", out_base, "archive base path")->required();
    fetch->callback([&]() {
        auto d = load_idx_dataset(images_path, labels_path);
        save_dataset_archive(d, out_base, "idx:" + images_path);
        std::cout << "imported " << d.size() << " samples (" << d.num_classes << " classes) -> "
                  << out_base << ".{json,f32}\n";
    });

    std::string synth_kind = "glyph-digits";
    int synth_count = 1000;
    std::string synth_shape = "1,28,28";
    std::uint64_t synth_seed = 0;
    auto* synth = data->add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--kind", synth_kind, "glyph-digits | glyph-letters | shifted-digits | noise");
    synth->add_option("--count", synth_count, "sample count");
    synth->add_option("--shape", synth_shape, "c,h,w");
    synth->add_option("--seed", synth_seed, "rng seed");
    synth->add_option("--out", out_base, "archive base path")->required();
    synth->callback([&]() {
        auto d = load_corpus(synth_kind, synth_count, parse_shape(synth_shape),
                             RngHandle(synth_seed, "cli/" + synth_kind));
        save_dataset_archive(d, out_base, synth_kind + " seed=" + std::to_string(synth_seed));
        std::cout << "wrote " << d.size() << " samples -> " << out_base << ".{json,f32}\n";
    });

    // ---- train ----------------------------------------------------------------
    auto* train = app.add_subcommand("train", "model training");
    train->require_subcommand(1);

    std::string data_base, victim_base, mae_base, aux_base, outliers_ref;
    TrainConfig tc;
    std::string arch = "conv3";

    auto* tv = train->add_subcommand("victim", "train the victim classifier");
    tv->add_option("--data", data_base, "training archive base")->required();
    tv->add_option("--arch", arch, "conv3 | mlp");
    tv->add_option("--epochs", tc.epochs);
    tv->add_option("--batch", tc.batch_size);
    tv->add_option("--lr", tc.learning_rate);
    tv->add_option("--seed", tc.seed);
    tv->add_option("--out", out_base, "checkpoint base path")->required();
    tv->callback([&]() {
        auto d = load_dataset_archive(data_base);
        auto model = train_classifier(parse_arch(arch), d, tc);
        model.save(out_base);
        std::cout << "victim " << model.weight_hash().substr(0, 12) << " train-acc "
                  << evaluate_accuracy(model, d) << " -> " << out_base << ".{json,bin}\n";
    });

    MaeArchConfig mae_arch;
    MaeTrainConfig mae_tc;
    auto* tm = train->add_subcommand("mae", "train the masked autoencoder");
    tm->add_option("--data", data_base, "training archive base")->required();
    tm->add_option("--epochs", mae_tc.epochs);
    tm->add_option("--warmup", mae_tc.warmup_epochs);
    tm->add_option("--batch", mae_tc.batch_size);
    tm->add_option("--lr", mae_tc.learning_rate);
    tm->add_option("--mask-ratio", mae_tc.mask_ratio);
    tm->add_option("--patch", mae_arch.patch_size);
    tm->add_option("--embed", mae_arch.embed_dim);
    tm->add_option("--depth", mae_arch.depth);
    tm->add_option("--heads", mae_arch.heads);
    tm->add_option("--decoder-depth", mae_arch.decoder_depth);
    tm->add_option("--seed", mae_tc.seed);
    tm->add_option("--out", out_base)->required();
    tm->callback([&]() {
        auto d = load_dataset_archive(data_base);
        auto mae = train_mae(d, mae_arch, mae_tc, [](int epoch, const MaeModel&, double loss) {
            if (epoch % 10 == 0 || epoch == 1) {
                std::cout << "epoch " << epoch << " loss " << loss << "\n";
            }
        });
        mae.save(out_base);
        std::cout << "mae " << mae.weight_hash().substr(0, 12) << " final-loss "
                  << mae.loss_curve().back() << " -> " << out_base << ".{json,bin,loss.csv}\n";
    });

    double aux_recon_ratio = -1.0;
    auto* ta = train->add_subcommand("aux", "train the auxiliary model against a victim and autoencoder");
    ta->add_option("--victim", victim_base)->required();
    ta->add_option("--mae", mae_base)->required();
    ta->add_option("--data", data_base, "the victim's training archive")->required();
    ta->add_option("--epochs", tc.epochs);
    ta->add_option("--batch", tc.batch_size);
    ta->add_option("--lr", tc.learning_rate);
    ta->add_option("--seed", tc.seed);
    ta->add_option("--recon-mask-ratio", aux_recon_ratio, "mask ratio for the reconstruction pass");
    ta->add_option("--out", out_base)->required();
    ta->callback([&]() {
        auto victim = Classifier::load(victim_base);
        auto mae = MaeModel::load(mae_base);
        if (aux_recon_ratio >= 0.0) mae.set_default_mask_ratio(aux_recon_ratio);
        auto d = load_dataset_archive(data_base);
        auto recon = build_reconstructed_dataset(mae, d, RngHandle(tc.seed, "cli/aux-recon"));
        auto aux = train_auxiliary(victim, mae, d, recon, tc);
        aux.save(out_base);
        std::cout << "aux " << aux.model.weight_hash().substr(0, 12) << " -> " << out_base
                  << ".{json,bin}\n";
    });

    double gamma = 0.5;
    int edm_models = 2;
    auto* toe = train->add_subcommand("oe", "train the outlier-exposure baseline");
    toe->add_option("--data", data_base)->required();
    toe->add_option("--outliers", outliers_ref, "outlier archive base or corpus name")->required();
    toe->add_option("--gamma", gamma);
    toe->add_option("--arch", arch);
    toe->add_option("--epochs", tc.epochs);
    toe->add_option("--batch", tc.batch_size);
    toe->add_option("--lr", tc.learning_rate);
    toe->add_option("--seed", tc.seed);
    toe->add_option("--out", out_base)->required();
    toe->callback([&]() {
        auto d = load_dataset_archive(data_base);
        auto outliers = load_corpus(outliers_ref, static_cast<int>(d.size()), d.shape(),
                                    RngHandle(tc.seed, "cli/oe-outliers"));
        auto oe = train_oe(d, outliers, gamma, tc, parse_arch(arch));
        oe.model.save(out_base);
        std::cout << "oe " << oe.model.weight_hash().substr(0, 12) << " -> " << out_base << ".{json,bin}\n";
    });

    auto* ted = train->add_subcommand("edm", "train the diverse-ensemble baseline");
    ted->add_option("--data", data_base)->required();
    ted->add_option("--outliers", outliers_ref)->required();
    ted->add_option("--gamma", gamma);
    ted->add_option("--models", edm_models);
    ted->add_option("--arch", arch);
    ted->add_option("--epochs", tc.epochs);
    ted->add_option("--batch", tc.batch_size);
    ted->add_option("--lr", tc.learning_rate);
    ted->add_option("--seed", tc.seed);
    ted->add_option("--out", out_base, "base path; one checkpoint per submodel")->required();
    ted->callback([&]() {
        auto d = load_dataset_archive(data_base);
        auto outliers = load_corpus(outliers_ref, static_cast<int>(d.size()), d.shape(),
                                    RngHandle(tc.seed, "cli/edm-outliers"));
        auto ens = train_edm(d, outliers, edm_models, gamma, tc, parse_arch(arch));
        for (std::size_t i = 0; i < ens.submodels.size(); ++i) {
            ens.submodels[i].save(out_base + "-" + std::to_string(i));
        }
        std::cout << "edm ensemble of " << ens.submodels.size() << " -> " << out_base << "-*.{json,bin}\n";
    });

    // ---- attack ------------------------------------------------------------------
    auto* attack = app.add_subcommand("attack", "malicious query generation");
    attack->require_subcommand(1);

    std::string attack_kind = "knockoff", proxy_ref = "glyph-letters", dfme_mode = "noise",
                strategy = "random";
    AttackConfig acfg;
    auto* gen = attack->add_subcommand("gen", "generate an attack query set");
    gen->add_option("--kind", attack_kind, "knockoff | jbda | dfme")->required();
    gen->add_option("--victim", victim_base, "victim checkpoint base")->required();
    gen->add_option("--budget", acfg.budget);
    gen->add_option("--seed", acfg.seed);
    gen->add_option("--proxy", proxy_ref, "knockoff proxy archive or corpus name");
    gen->add_option("--strategy", strategy, "knockoff: random | balanced");
    gen->add_option("--seeds", acfg.jbda_seed_count, "jbda seed count");
    gen->add_option("--step", acfg.jbda_step, "jbda perturbation step");
    gen->add_option("--mode", dfme_mode, "dfme: noise | generator");
    gen->add_option("--iterations", acfg.dfme_iterations, "dfme generator iterations");
    gen->add_option("--out", out_base)->required();
    gen->callback([&]() {
        auto victim = Classifier::load(victim_base);
        acfg.kind = parse_attack_kind(attack_kind);
        acfg.knockoff_strategy = strategy == "balanced" ? KnockoffStrategy::balanced : KnockoffStrategy::random;
        acfg.dfme_mode = dfme_mode == "generator" ? DfmeMode::generator : DfmeMode::noise;
        acfg.proxy_id = proxy_ref;
        QuerySet qs;
        switch (acfg.kind) {
            case AttackKind::knockoff: {
                auto proxy = load_corpus(proxy_ref, acfg.budget * 2, victim.input_shape(),
                                         RngHandle(acfg.seed, "cli/proxy"));
                qs = knockoff_select(proxy, acfg);
                break;
            }
            case AttackKind::jbda: {
                auto seeds = render_glyph_dataset(GlyphSet::digits, acfg.jbda_seed_count,
                                                  victim.input_shape(), RngHandle(acfg.seed, "cli/seeds"));
                Classifier substitute(victim.arch(), victim.input_shape(), victim.num_classes(),
                                      RngHandle(acfg.seed, "jbda-sub-init"));
                qs = jbda_augment(seeds, substitute, oracle_of(victim), acfg);
                break;
            }
            case AttackKind::dfme:
                qs = dfme_synthesize(oracle_of(victim), victim.input_shape(), acfg);
                break;
        }
        LabeledDataset store;
        store.name = out_base;
        store.num_classes = 1;
        store.samples = qs.samples;
        store.labels.assign(qs.samples.size(), 0);
        nlohmann::json prov{{"kind", attack_kind}, {"budget", acfg.budget}, {"seed", acfg.seed}};
        save_dataset_archive(store, out_base, prov.dump());
        std::cout << "generated " << qs.size() << " queries -> " << out_base << ".{json,f32}\n";
    });

    // ---- detect -------------------------------------------------------------------
    auto* detect = app.add_subcommand("detect", "detector calibration and scoring");
    detect->require_subcommand(1);

    std::string clean_ref, bundle_path = "detector.json", scores_out = "scores.csv";
    double alpha = 0.5, target_fpr = 0.05, score_ratio = -1.0;
    auto* cal = detect->add_subcommand("calibrate", "assemble and calibrate a detector bundle");
    cal->add_option("--victim", victim_base)->required();
    cal->add_option("--mae", mae_base)->required();
    cal->add_option("--aux", aux_base)->required();
    cal->add_option("--clean", clean_ref, "clean calibration archive base")->required();
    cal->add_option("--alpha", alpha);
    cal->add_option("--target-fpr", target_fpr);
    cal->add_option("--score-mask-ratio", score_ratio);
    cal->add_option("--bundle", bundle_path, "output bundle path");
    cal->callback([&]() {
        auto victim = Classifier::load(victim_base);
        auto mae = MaeModel::load(mae_base);
        auto aux = AuxiliaryModel::load(aux_base);
        DetectorConfig dc;
        dc.alpha = alpha;
        dc.score_mask_ratio = score_ratio >= 0.0 ? score_ratio : mae.default_mask_ratio();
        Detector det(std::move(victim), std::move(mae), std::move(aux), dc);
        auto clean = load_dataset_archive(clean_ref);
        auto summary = det.calibrate(clean, target_fpr);
        det.set_checkpoint_paths(victim_base, mae_base, aux_base);
        det.save_bundle(bundle_path);
        std::cout << "bundle -> " << bundle_path << "  tau=" << summary.threshold
                  << " c_rec=" << summary.c_rec << " c_dev=" << summary.c_dev
                  << " clean-fpr=" << summary.empirical_fpr << "\n";
    });

    std::string input_ref;
    auto* sc = detect->add_subcommand("score", "score an archive of queries against a bundle");
    sc->add_option("--bundle", bundle_path)->required();
    sc->add_option("--input", input_ref, "query archive base")->required();
    sc->add_option("--out", scores_out, "CSV output path");
    sc->callback([&]() {
        auto det = Detector::load_bundle(bundle_path);
        auto queries = load_dataset_archive(input_ref);
        std::ofstream out(scores_out);
        if (!out) throw IoError("cannot write " + scores_out);
        out << "index,recon_error,deviation_error,score,verdict\n";
        long malicious = 0;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto r = det.score(queries.samples[i]);
            malicious += (r.verdict == Verdict::malicious);
            out << i << ',' << r.recon_error << ',' << r.deviation_error << ',' << r.score << ','
                << (r.verdict == Verdict::malicious ? "malicious" : "benign") << "\n";
        }
        std::cout << "scored " << queries.size() << " queries, " << malicious << " flagged -> "
                  << scores_out << "\n";
    });

    // ---- eval -----------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "end-to-end experiments");
    eval->require_subcommand(1);
    std::string config_path, output_dir_override;
    auto* run = eval->add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path)->required();
    run->add_option("--output-dir", output_dir_override, "override the config's output directory");
    run->callback([&]() {
        auto cfg = ExperimentConfig::load_file(config_path);
        if (!output_dir_override.empty()) cfg.output_dir = output_dir_override;
        auto report = run_experiment(cfg);
        std::cout << "victim accuracy " << report.victim_accuracy_percent << "%\n";
        for (const auto& r : report.rows) {
            std::cout << r.defense << " vs " << r.attack << " (B=" << r.budget << ", ratio=" << r.ratio
                      << "): AUROC " << r.auroc << " AUPR " << r.aupr << " FPR95 " << r.fpr95 << "\n";
        }
        std::cout << "report -> " << cfg.output_dir << "/report.{json,csv,md}\n";
    });

    // ---- serve ----------------------------------------------------------------------
    std::string policy_name = "reject", bind_addr = "127.0.0.1";
    int port = 8080;
    DefensePolicy policy;
    auto* serve = app.add_subcommand("serve", "serve the victim behind the detector");
    serve->add_option("--bundle", bundle_path)->required();
    serve->add_option("--policy", policy_name, "monitor | reject | pow");
    serve->add_option("--bind", bind_addr);
    serve->add_option("--port", port);
    serve->add_option("--pow-base-bits", policy.pow_base_bits);
    serve->add_option("--pow-max-bits", policy.pow_max_bits);
    serve->add_option("--pow-slope", policy.pow_slope);
    serve->callback([&]() {
        auto det = Detector::load_bundle(bundle_path);
        policy.kind = parse_policy_kind(policy_name);
        HttpGateway gw(std::move(det), policy);
        int bound = gw.start(bind_addr, port);
        std::cout << "serving on " << bind_addr << ":" << bound << " policy=" << policy_name << "\n";
        std::signal(SIGINT, [](int) { g_stop = 1; });
        std::signal(SIGTERM, [](int) { g_stop = 1; });
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
        gw.stop();
        std::cout << "stopped after " << gw.core().queries_served() << " queries\n";
    });

    // ---- report -----------------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "report rendering");
    report_cmd->require_subcommand(1);
    std::string report_path, formats = "json,csv,markdown", render_dir = ".";
    auto* render = report_cmd->add_subcommand("render", "re-render a stored report");
    render->add_option("--report", report_path, "report.json path")->required();
    render->add_option("--formats", formats, "comma list: json,csv,markdown");
    render->add_option("--out-dir", render_dir);
    render->callback([&]() {
        auto report = load_report(report_path);
        auto files = emit_report(report, render_dir, parse_report_formats(formats));
        for (const auto& f : files) std::cout << "wrote " << f << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
