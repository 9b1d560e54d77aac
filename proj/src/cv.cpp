#include "uat/cv.hpp"

#include <algorithm>
#include <string>

#include <json.hpp>

#include "uat/errors.hpp"

namespace uat {

std::vector<HyperPoint> HyperGrid::points() const {
    std::vector<HyperPoint> out;
    out.reserve(betas.size() * gammas.size() * alphas.size() * margins.size() *
                clf_hiddens.size());
    for (double b : betas)
        for (double g : gammas)
            for (double a : alphas)
                for (double m : margins)
                    for (int h : clf_hiddens) out.push_back({b, g, a, m, h});
    return out;
}

void HyperGrid::validate() const {
    if (betas.empty() || gammas.empty() || alphas.empty() || margins.empty() ||
        clf_hiddens.empty())
        throw validation_error("hyperparameter grid has an empty axis");
    for (int h : clf_hiddens)
        if (h < 1) throw validation_error("clf_hidden must be positive");
    for (double b : betas)
        for (double g : gammas)
            for (double a : alphas)
                for (double m : margins) LossWeights{b, g, a, m}.validate_grid_ranges();
}

void CVConfig::validate() const {
    if (outer_folds < 2) throw validation_error("outer_folds must be >= 2");
    if (inner_folds < 2) throw validation_error("inner_folds must be >= 2");
    if (mc_samples < 1) throw validation_error("mc_samples must be >= 1");
    if (jitter_p < 0.0 || jitter_p > 1.0)
        throw validation_error("jitter_p must lie in [0,1]");
    train.validate();
}

namespace {

// seed-stream ids local to cross-validation
enum : std::uint64_t {
    kStreamOuterFolds = 20,
    kStreamInnerFolds = 21,
    kStreamInnerTrain = 22,
    kStreamOuterTrain = 23,
    kStreamEpistemic = 24,
    kStreamAleatoric = 25,
};

}  // namespace

std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw validation_error("fold count must be >= 2");
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1)
            pos.push_back(static_cast<int>(i));
        else if (labels[i] == 0)
            neg.push_back(static_cast<int>(i));
        else
            throw validation_error("stratified folds: labels must be 0 or 1");
    }
    if (static_cast<int>(pos.size()) < k || static_cast<int>(neg.size()) < k)
        throw validation_error("stratification error: a class has fewer members (" +
                               std::to_string(std::min(pos.size(), neg.size())) +
                               ") than folds (" + std::to_string(k) + ")");

    Rng pos_rng(derive_seed(seed, 1));
    Rng neg_rng(derive_seed(seed, 0));
    pos_rng.shuffle(pos);
    neg_rng.shuffle(neg);

    // round-robin dealing with a cursor carried across classes keeps both the
    // per-class counts and the total fold sizes within one of each other
    std::vector<int> fold(labels.size(), -1);
    int cursor = 0;
    for (int i : pos) fold[i] = cursor++ % k;
    for (int i : neg) fold[i] = cursor++ % k;
    return fold;
}

namespace {

std::vector<const SegSequence*> subject_ptrs(const Dataset& data, const std::vector<int>& idx) {
    std::vector<const SegSequence*> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(&data.subjects[i]);
    return out;
}

TrainConfig point_config(const TrainConfig& base, const HyperPoint& p, std::uint64_t seed) {
    TrainConfig tc = base;
    tc.weights.beta = p.beta;
    tc.weights.gamma = p.gamma;
    tc.weights.alpha = p.alpha;
    tc.weights.margin = p.margin;
    tc.clf_hidden = p.clf_hidden;
    tc.seed = seed;
    return tc;
}

double score_on(const ModelParams& params, const Dataset& data, const std::vector<int>& idx) {
    std::vector<int> preds, labels;
    preds.reserve(idx.size());
    for (int i : idx) {
        preds.push_back(predict(params, data.subjects[i]).predicted);
        labels.push_back(data.subjects[i].label);
    }
    return balanced_accuracy(preds, labels);
}

}  // namespace

CVResult nested_cv(const Dataset& data, const HyperGrid& grid, const CVConfig& cfg) {
    cfg.validate();
    grid.validate();
    if (data.subjects.size() < 10)
        throw validation_error("nested CV needs at least 10 subjects, got " +
                               std::to_string(data.subjects.size()));

    const std::vector<int> labels = data.labels();
    const std::uint64_t seed = cfg.train.seed;
    const std::vector<int> outer =
        stratified_folds(labels, cfg.outer_folds, derive_seed(seed, kStreamOuterFolds));
    const std::vector<HyperPoint> points = grid.points();

    CVResult result;
    result.epistemic.kind = UncertaintyKind::epistemic;
    result.aleatoric.kind = UncertaintyKind::aleatoric;
    const InputSampler jitter = boundary_jitter_sampler(cfg.jitter_p);

    double ba_sum = 0.0;
    for (int f = 0; f < cfg.outer_folds; ++f) {
        FoldResult fold;
        std::vector<int> train_idx, test_idx;
        for (std::size_t i = 0; i < outer.size(); ++i)
            (outer[i] == f ? test_idx : train_idx).push_back(static_cast<int>(i));

        std::vector<int> train_labels;
        train_labels.reserve(train_idx.size());
        for (int i : train_idx) train_labels.push_back(labels[i]);
        const std::vector<int> inner = stratified_folds(
            train_labels, cfg.inner_folds,
            derive_seed(seed, kStreamInnerFolds, static_cast<std::uint64_t>(f)));

        for (int s = 0; s < cfg.inner_folds; ++s) {
            InnerSplit split;
            for (std::size_t j = 0; j < train_idx.size(); ++j)
                (inner[j] == s ? split.val_ids : split.train_ids).push_back(train_idx[j]);
            fold.log.inner_splits.push_back(std::move(split));
        }

        // inner CV scores every grid point on the same splits and seeds, so
        // arms differ only in the hyperparameters under test
        int best = 0;
        double best_score = -1.0;
        for (std::size_t pi = 0; pi < points.size(); ++pi) {
            double score = 0.0;
            for (int s = 0; s < cfg.inner_folds; ++s) {
                const auto& split = fold.log.inner_splits[s];
                const TrainConfig tc = point_config(
                    cfg.train, points[pi],
                    derive_seed(seed, kStreamInnerTrain, static_cast<std::uint64_t>(f),
                                static_cast<std::uint64_t>(s)));
                const TrainResult tr = train(subject_ptrs(data, split.train_ids), tc);
                score += score_on(tr.params, data, split.val_ids);
            }
            score /= cfg.inner_folds;
            if (score > best_score) {  // ties keep the earliest grid point
                best_score = score;
                best = static_cast<int>(pi);
            }
        }
        fold.selected = points[best];

        const TrainConfig tc = point_config(
            cfg.train, points[best],
            derive_seed(seed, kStreamOuterTrain, static_cast<std::uint64_t>(f)));
        const TrainResult tr = train(subject_ptrs(data, train_idx), tc);

        fold.test_ids = test_idx;
        fold.log.train_ids = train_idx;
        fold.log.test_ids = test_idx;
        for (int i : test_idx) {
            const Prediction p = predict(tr.params, data.subjects[i]);
            fold.predictions.push_back(p.predicted);
            fold.labels.push_back(data.subjects[i].label);
            fold.p_pos.push_back(p.p_pos);

            result.epistemic_results.push_back(estimate_epistemic(
                tr.params, data.subjects[i], cfg.mc_samples,
                derive_seed(seed, kStreamEpistemic, static_cast<std::uint64_t>(f),
                            static_cast<std::uint64_t>(i))));
            result.aleatoric_results.push_back(estimate_aleatoric(
                tr.params, data.subjects[i], jitter, cfg.mc_samples,
                derive_seed(seed, kStreamAleatoric, static_cast<std::uint64_t>(f),
                            static_cast<std::uint64_t>(i))));
        }
        fold.balanced_acc = balanced_accuracy(fold.predictions, fold.labels);
        ba_sum += fold.balanced_acc;
        result.folds.push_back(std::move(fold));
    }

    result.mean_balanced_accuracy = ba_sum / cfg.outer_folds;
    result.epistemic = banded_report(result.epistemic_results, UncertaintyKind::epistemic);
    result.aleatoric = banded_report(result.aleatoric_results, UncertaintyKind::aleatoric);
    return result;
}

namespace {

double mean_tp_confidence(const std::vector<ConfidenceResult>& results) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : results) {
        if (outcome_of(r.predicted, r.label) != Outcome::TP) continue;
        sum += r.confidence;
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

}  // namespace

CompareReport compare_models(const Dataset& data, const HyperGrid& grid, const CVConfig& cfg) {
    CompareReport report;

    HyperGrid baseline_grid = grid;
    baseline_grid.alphas = {0.0};
    baseline_grid.margins = {0.0};
    CVConfig baseline_cfg = cfg;
    baseline_cfg.train.mode = TrainMode::baseline;
    report.baseline = nested_cv(data, baseline_grid, baseline_cfg);

    CVConfig ua_cfg = cfg;
    ua_cfg.train.mode = TrainMode::uncertainty_aware;
    report.ua = nested_cv(data, grid, ua_cfg);

    report.baseline_tp_confidence = mean_tp_confidence(report.baseline.epistemic_results);
    report.ua_tp_confidence = mean_tp_confidence(report.ua.epistemic_results);
    return report;
}

// --- JSON reports ----------------------------------------------------------

namespace {

nlohmann::json point_json(const HyperPoint& p) {
    return {{"beta", p.beta},
            {"gamma", p.gamma},
            {"alpha", p.alpha},
            {"margin", p.margin},
            {"clf_hidden", p.clf_hidden}};
}

nlohmann::json cv_json(const CVResult& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        const auto& fold = r.folds[f];
        nlohmann::json splits = nlohmann::json::array();
        for (const auto& s : fold.log.inner_splits)
            splits.push_back({{"train_ids", s.train_ids}, {"val_ids", s.val_ids}});
        folds.push_back({{"fold", f},
                         {"selected", point_json(fold.selected)},
                         {"test_ids", fold.test_ids},
                         {"predictions", fold.predictions},
                         {"labels", fold.labels},
                         {"p_pos", fold.p_pos},
                         {"balanced_accuracy", fold.balanced_acc},
                         {"train_ids", fold.log.train_ids},
                         {"inner_splits", splits}});
    }
    return {{"mean_balanced_accuracy", r.mean_balanced_accuracy},
            {"folds", folds},
            {"epistemic", nlohmann::json::parse(report_json(r.epistemic))},
            {"aleatoric", nlohmann::json::parse(report_json(r.aleatoric))}};
}

nlohmann::json delta_json(const BandedReport& ua, const BandedReport& baseline) {
    nlohmann::json cells = nlohmann::json::array();
    for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 4; ++c)
            cells.push_back({{"band", BandedReport::band_name(b)},
                             {"outcome", outcome_name(static_cast<Outcome>(c))},
                             {"delta", ua.counts[b][c] - baseline.counts[b][c]}});
    return cells;
}

}  // namespace

std::string cv_result_json(const CVResult& r) { return cv_json(r).dump(); }

std::string compare_report_json(const CompareReport& r) {
    nlohmann::json j{{"baseline", cv_json(r.baseline)},
                     {"ua", cv_json(r.ua)},
                     {"baseline_tp_confidence", r.baseline_tp_confidence},
                     {"ua_tp_confidence", r.ua_tp_confidence},
                     {"delta_epistemic", delta_json(r.ua.epistemic, r.baseline.epistemic)},
                     {"delta_aleatoric", delta_json(r.ua.aleatoric, r.baseline.aleatoric)}};
    return j.dump();
}

}  // namespace uat
