// uncertainty.hpp - Monte-Carlo confidence estimation and banded reporting
//
// Confidence in the predicted class is the percentage of MC forwards agreeing
// with it, out of n_samples (default 20, the original forward counting as
// sample one). Epistemic sampling redraws the latent; aleatoric sampling
// propagates perturbed input segmentations. Reports cross-tabulate confidence
// bands 0-30 / 31-70 / 71-100 against TP/FN/FP/TN outcomes.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uat/data.hpp"
#include "uat/model.hpp"

namespace uat {

enum class UncertaintyKind { epistemic, aleatoric };
const char* kind_name(UncertaintyKind kind);

// column order matches the report tables
enum class Outcome { TP = 0, FN = 1, FP = 2, TN = 3 };
Outcome outcome_of(int predicted, int label);
const char* outcome_name(Outcome o);

struct ConfidenceResult {
    std::string subject_id;
    int predicted = 0;  // from the mean-mode forward
    int label = 0;
    double confidence = 0.0;  // percent, in the predicted class
    UncertaintyKind kind = UncertaintyKind::epistemic;
    int n_samples = 0;
    std::vector<int> sample_predictions;  // per MC sample, 1 = positive
};

struct BandedReport {
    UncertaintyKind kind = UncertaintyKind::epistemic;
    std::array<std::array<int, 4>, 3> counts{};  // band x (TP, FN, FP, TN)

    int total() const;
    int column_sum(Outcome o) const;
    static const char* band_name(int band);  // "0-30", "31-70", "71-100"
};

// Draws n_samples - 1 fresh latent samples (independent per-frame noise from
// the posterior) on top of the mean-mode forward. Deterministic given seed;
// per-sample noise streams are derived from (seed, sample index).
ConfidenceResult estimate_epistemic(const ModelParams& params, const SegSequence& record,
                                    int n_samples, std::uint64_t seed);

using InputSampler = std::function<SegSequence(const SegSequence&, Rng&)>;

// Mean-mode forwards of the original record plus n_samples - 1 perturbed
// variants produced by the sampler.
ConfidenceResult estimate_aleatoric(const ModelParams& params, const SegSequence& record,
                                    const InputSampler& sampler, int n_samples,
                                    std::uint64_t seed);

// the stand-in for inference-time segmentation dropout: boundary jitter
InputSampler boundary_jitter_sampler(double p);

// [0,30] -> 0, (30,70] -> 1, (70,100] -> 2; out of range -> validation error
int confidence_band(double confidence);

BandedReport banded_report(const std::vector<ConfidenceResult>& results,
                           UncertaintyKind kind);

std::string format_report_table(const BandedReport& report);
std::string report_json(const BandedReport& report);  // (band, outcome, count) triples

}  // namespace uat
