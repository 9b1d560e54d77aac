// cv.hpp - nested stratified cross-validation and model comparison
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uat/data.hpp"
#include "uat/train.hpp"
#include "uat/uncertainty.hpp"

namespace uat {

struct HyperPoint {
    double beta = 1.0;
    double gamma = 1.0;
    double alpha = 0.0;
    double margin = 0.0;
    int clf_hidden = 32;
};

// cartesian grid, enumerated with beta outermost and clf_hidden innermost
struct HyperGrid {
    std::vector<double> betas{1.0};
    std::vector<double> gammas{1.0};
    std::vector<double> alphas{0.0};
    std::vector<double> margins{0.0};
    std::vector<int> clf_hiddens{32};

    std::vector<HyperPoint> points() const;
    void validate() const;
};

struct InnerSplit {
    std::vector<int> train_ids;
    std::vector<int> val_ids;
};

// id bookkeeping for the leakage audit
struct FoldLog {
    std::vector<int> train_ids;
    std::vector<int> test_ids;
    std::vector<InnerSplit> inner_splits;
};

struct FoldResult {
    HyperPoint selected;
    std::vector<int> test_ids;
    std::vector<int> predictions;
    std::vector<int> labels;
    std::vector<double> p_pos;
    double balanced_acc = 0.0;
    FoldLog log;
};

struct CVResult {
    std::vector<FoldResult> folds;
    double mean_balanced_accuracy = 0.0;
    BandedReport epistemic;
    BandedReport aleatoric;
    std::vector<ConfidenceResult> epistemic_results;
    std::vector<ConfidenceResult> aleatoric_results;
};

struct CVConfig {
    TrainConfig train;
    int outer_folds = 5;
    int inner_folds = 2;
    int mc_samples = 20;
    double jitter_p = 0.5;

    void validate() const;
};

// Stratified k-fold assignment: returns fold index per subject. Class members
// are shuffled then dealt round-robin with a cursor that carries across
// classes, so fold sizes differ by at most one and per-class counts differ by
// at most one. Throws if any class has fewer members than k.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

// Nested CV: inner k-fold selects the grid point with the best mean balanced
// accuracy (ties keep the earliest point in enumeration order), the winner is
// retrained on the full outer-train split and scored on the held-out fold.
// Banded uncertainty reports pool the held-out predictions of every fold.
CVResult nested_cv(const Dataset& data, const HyperGrid& grid, const CVConfig& cfg);

struct CompareReport {
    CVResult baseline;
    CVResult ua;
    // mean confidence over true positives, epistemic sampling
    double baseline_tp_confidence = 0.0;
    double ua_tp_confidence = 0.0;
};

// Runs nested_cv twice with identical folds and seeds: once in baseline mode
// (alpha and margin zeroed out of the grid) and once uncertainty-aware.
CompareReport compare_models(const Dataset& data, const HyperGrid& grid, const CVConfig& cfg);

std::string cv_result_json(const CVResult& r);
std::string compare_report_json(const CompareReport& r);

}  // namespace uat
