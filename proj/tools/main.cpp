// uat - command-line surface: synthetic data, training, evaluation,
// cross-validation, model comparison, and the gradient-check suite.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "uat/cv.hpp"
#include "uat/data.hpp"
#include "uat/errors.hpp"
#include "uat/gradcheck.hpp"
#include "uat/model.hpp"
#include "uat/train.hpp"
#include "uat/uncertainty.hpp"

namespace {

using nlohmann::json;

json parse_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw uat::validation_error(std::string("cannot open ") + what + ": " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw uat::validation_error(std::string("malformed ") + what + " " + path + ": " +
                                    e.what());
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw uat::validation_error(std::string("config key '") + key + "': " + e.what());
    }
}

uat::TrainConfig train_config_from_json(const json& j) {
    uat::TrainConfig cfg;
    maybe(j, "epochs", cfg.epochs);
    maybe(j, "batch_size", cfg.batch_size);
    maybe(j, "lr_vae", cfg.lr_vae);
    maybe(j, "lr_clf", cfg.lr_clf);
    if (j.contains("schedule")) {
        const std::string s = j.at("schedule").get<std::string>();
        if (s == "fixed")
            cfg.schedule = uat::LrSchedule::fixed;
        else if (s == "exp_decay")
            cfg.schedule = uat::LrSchedule::exp_decay;
        else
            throw uat::validation_error("schedule must be 'fixed' or 'exp_decay'");
    }
    maybe(j, "lr_decay_start", cfg.lr_decay_start);
    maybe(j, "lr_decay_end", cfg.lr_decay_end);
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        maybe(w, "beta", cfg.weights.beta);
        maybe(w, "gamma", cfg.weights.gamma);
        maybe(w, "alpha", cfg.weights.alpha);
        maybe(w, "margin", cfg.weights.margin);
    }
    maybe(j, "seed", cfg.seed);
    maybe(j, "latent_dim", cfg.latent_dim);
    maybe(j, "enc_hidden", cfg.enc_hidden);
    maybe(j, "dec_hidden", cfg.dec_hidden);
    maybe(j, "clf_hidden", cfg.clf_hidden);
    return cfg;
}

uat::HyperGrid grid_from_json(const json& j) {
    uat::HyperGrid grid;
    maybe(j, "betas", grid.betas);
    maybe(j, "gammas", grid.gammas);
    maybe(j, "alphas", grid.alphas);
    maybe(j, "margins", grid.margins);
    maybe(j, "clf_hiddens", grid.clf_hiddens);
    return grid;
}

uat::TrainMode parse_mode(const std::string& mode) {
    if (mode == "baseline") return uat::TrainMode::baseline;
    if (mode == "ua") return uat::TrainMode::uncertainty_aware;
    throw uat::validation_error("mode must be 'baseline' or 'ua'");
}

std::vector<const uat::SegSequence*> all_subjects(const uat::Dataset& data) {
    std::vector<const uat::SegSequence*> out;
    out.reserve(data.subjects.size());
    for (const auto& s : data.subjects) out.push_back(&s);
    return out;
}

void print_trace(const std::vector<uat::LossBreakdown>& trace) {
    std::printf("epoch        l_re        l_kl         l_c         l_u     l_total\n");
    for (std::size_t e = 0; e < trace.size(); ++e)
        std::printf("%5zu %.9g %.9g %.9g %.9g %.9g\n", e, trace[e].l_re, trace[e].l_kl,
                    trace[e].l_c, trace[e].l_u, trace[e].l_total);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    // stderr keeps stdout byte-identical across reruns
    ~Timer() {
        std::fprintf(stderr, "elapsed: %.1f s\n",
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                         .count());
    }
};

int run(int argc, char** argv) {
    CLI::App app{"variational segmentation-sequence classifier toolkit"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    uat::GenConfig gen_cfg;
    std::string gen_out;
    gen->add_option("--n-subjects", gen_cfg.n_subjects, "number of subjects");
    gen->add_option("--frames", gen_cfg.n_frames, "frames per subject");
    gen->add_option("--height", gen_cfg.height, "frame height");
    gen->add_option("--width", gen_cfg.width, "frame width");
    gen->add_option("--classes", gen_cfg.n_classes, "number of pixel classes");
    gen->add_option("--responder-fraction", gen_cfg.responder_fraction,
                    "target fraction of responders");
    gen->add_option("--threshold", gen_cfg.threshold, "contraction threshold for label 1");
    gen->add_option("--f-nonresponder-mean", gen_cfg.f_nonresponder_mean,
                    "contraction mean, non-responders");
    gen->add_option("--f-responder-mean", gen_cfg.f_responder_mean,
                    "contraction mean, responders");
    gen->add_option("--f-sigma", gen_cfg.f_sigma, "contraction standard deviation");
    gen->add_option("--pixel-noise", gen_cfg.pixel_noise, "per-pixel class flip probability");
    gen->add_option("--seed", gen_cfg.seed, "master seed");
    gen->add_option("--out", gen_out, "output dataset path")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train one model on a dataset");
    std::string train_data, train_config, train_mode = "baseline", train_out;
    std::uint64_t train_seed = 42;
    bool train_seed_set = false;
    train_cmd->add_option("--data", train_data, "dataset path")->required();
    train_cmd->add_option("--config", train_config, "training config file");
    train_cmd->add_option("--mode", train_mode, "baseline|ua");
    train_cmd->add_option("--seed", train_seed, "master seed")
        ->each([&](const std::string&) { train_seed_set = true; });
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint with uncertainty");
    std::string eval_ckpt, eval_data, eval_kind = "both";
    int eval_samples = 20;
    double eval_jitter = 0.5;
    std::uint64_t eval_seed = 42;
    bool eval_json = false;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "dataset path")->required();
    eval_cmd->add_option("--uncertainty", eval_kind, "epistemic|aleatoric|both");
    eval_cmd->add_option("--samples", eval_samples, "MC samples per subject");
    eval_cmd->add_option("--jitter", eval_jitter, "boundary jitter probability");
    eval_cmd->add_option("--seed", eval_seed, "master seed");
    eval_cmd->add_flag("--json", eval_json, "emit JSON instead of tables");

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "nested cross-validation");
    std::string cv_data, cv_grid, cv_config, cv_mode = "baseline";
    std::uint64_t cv_seed = 42;
    bool cv_seed_set = false;
    int cv_samples = 20;
    double cv_jitter = 0.5;
    cv_cmd->add_option("--data", cv_data, "dataset path")->required();
    cv_cmd->add_option("--grid", cv_grid, "hyperparameter grid file");
    cv_cmd->add_option("--config", cv_config, "training config file");
    cv_cmd->add_option("--mode", cv_mode, "baseline|ua");
    cv_cmd->add_option("--seed", cv_seed, "master seed")
        ->each([&](const std::string&) { cv_seed_set = true; });
    cv_cmd->add_option("--mc-samples", cv_samples, "MC samples per subject");
    cv_cmd->add_option("--jitter", cv_jitter, "boundary jitter probability");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "baseline vs uncertainty-aware nested CV");
    std::string cmp_data, cmp_grid, cmp_config;
    std::uint64_t cmp_seed = 42;
    bool cmp_seed_set = false;
    int cmp_samples = 20;
    double cmp_jitter = 0.5;
    cmp_cmd->add_option("--data", cmp_data, "dataset path")->required();
    cmp_cmd->add_option("--grid", cmp_grid, "hyperparameter grid file");
    cmp_cmd->add_option("--config", cmp_config, "training config file");
    cmp_cmd->add_option("--seed", cmp_seed, "master seed")
        ->each([&](const std::string&) { cmp_seed_set = true; });
    cmp_cmd->add_option("--mc-samples", cmp_samples, "MC samples per subject");
    cmp_cmd->add_option("--jitter", cmp_jitter, "boundary jitter probability");

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    int gc_instances = 100;
    double gc_tol = 1e-5;
    std::uint64_t gc_seed = 42;
    gc_cmd->add_option("--instances", gc_instances, "random instances per case");
    gc_cmd->add_option("--tolerance", gc_tol, "max relative error allowed");
    gc_cmd->add_option("--seed", gc_seed, "master seed");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        uat::write_dataset(uat::generate_dataset(gen_cfg), gen_out);
        std::printf("wrote %d subjects to %s\n", gen_cfg.n_subjects, gen_out.c_str());
        return 0;
    }

    if (train_cmd->parsed()) {
        Timer timer;
        uat::TrainConfig cfg;
        if (!train_config.empty())
            cfg = train_config_from_json(parse_json_file(train_config, "training config"));
        cfg.mode = parse_mode(train_mode);
        if (train_seed_set || train_config.empty()) cfg.seed = train_seed;
        if (cfg.epochs < 1) throw uat::validation_error("epochs must be >= 1");

        const uat::Dataset data = uat::read_dataset(train_data);
        const uat::TrainResult result = uat::train(all_subjects(data), cfg);
        print_trace(result.trace);
        uat::save_checkpoint(train_out, result.params, result.seed, result.epochs_run);
        std::printf("checkpoint: %s\n", train_out.c_str());
        return 0;
    }

    if (eval_cmd->parsed()) {
        Timer timer;
        if (eval_kind != "epistemic" && eval_kind != "aleatoric" && eval_kind != "both")
            throw uat::validation_error("--uncertainty must be epistemic, aleatoric or both");
        const uat::Checkpoint ckpt = uat::load_checkpoint(eval_ckpt);
        const uat::Dataset data = uat::read_dataset(eval_data);

        std::vector<uat::ConfidenceResult> epi, ale;
        const uat::InputSampler jitter = uat::boundary_jitter_sampler(eval_jitter);
        for (std::size_t i = 0; i < data.subjects.size(); ++i) {
            if (eval_kind != "aleatoric")
                epi.push_back(uat::estimate_epistemic(
                    ckpt.params, data.subjects[i], eval_samples,
                    uat::derive_seed(eval_seed, 1, static_cast<std::uint64_t>(i))));
            if (eval_kind != "epistemic")
                ale.push_back(uat::estimate_aleatoric(
                    ckpt.params, data.subjects[i], jitter, eval_samples,
                    uat::derive_seed(eval_seed, 2, static_cast<std::uint64_t>(i))));
        }

        if (!epi.empty() || eval_kind != "aleatoric") {
            const uat::BandedReport r =
                uat::banded_report(epi, uat::UncertaintyKind::epistemic);
            std::printf("%s", eval_json ? (uat::report_json(r) + "\n").c_str()
                                        : uat::format_report_table(r).c_str());
        }
        if (!ale.empty() || eval_kind != "epistemic") {
            const uat::BandedReport r =
                uat::banded_report(ale, uat::UncertaintyKind::aleatoric);
            std::printf("%s", eval_json ? (uat::report_json(r) + "\n").c_str()
                                        : uat::format_report_table(r).c_str());
        }
        return 0;
    }

    if (cv_cmd->parsed() || cmp_cmd->parsed()) {
        Timer timer;
        const bool is_cv = cv_cmd->parsed();
        const std::string& data_path = is_cv ? cv_data : cmp_data;
        const std::string& grid_path = is_cv ? cv_grid : cmp_grid;
        const std::string& config_path = is_cv ? cv_config : cmp_config;

        uat::CVConfig cfg;
        if (!config_path.empty())
            cfg.train = train_config_from_json(parse_json_file(config_path, "training config"));
        cfg.mc_samples = is_cv ? cv_samples : cmp_samples;
        cfg.jitter_p = is_cv ? cv_jitter : cmp_jitter;
        if ((is_cv ? cv_seed_set : cmp_seed_set) || config_path.empty())
            cfg.train.seed = is_cv ? cv_seed : cmp_seed;

        uat::HyperGrid grid;
        if (!grid_path.empty())
            grid = grid_from_json(parse_json_file(grid_path, "hyperparameter grid"));

        const uat::Dataset data = uat::read_dataset(data_path);
        if (is_cv) {
            cfg.train.mode = parse_mode(cv_mode);
            const uat::CVResult result = uat::nested_cv(data, grid, cfg);
            std::printf("%s\n", uat::cv_result_json(result).c_str());
        } else {
            const uat::CompareReport result = uat::compare_models(data, grid, cfg);
            std::printf("%s\n", uat::compare_report_json(result).c_str());
        }
        return 0;
    }

    // gradcheck
    {
        Timer timer;
        const uat::GradCheckReport report =
            uat::run_grad_checks(gc_instances, gc_tol, gc_seed);
        std::printf("%s", uat::format_grad_report(report).c_str());
        if (!report.all_passed) throw uat::numeric_error("gradient checks failed");
        return 0;
    }
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const uat::numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const uat::validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
