// train.hpp - gradient training of the VAE-classifier
//
// Adam with separate learning rates for VAE and classifier parameters.
// Uncertainty-aware runs (alpha > 0) are two-phase: a baseline phase (alpha
// forced to 0) trains the VAE and classifier first, then the classifier head
// is freshly initialised and both are trained again with the uncertainty term
// switched on. With alpha = 0 the run is the single baseline phase, so an
// uncertainty-aware configuration with alpha = 0 degenerates to baseline
// training exactly.
#pragma once

#include <cstdint>
#include <vector>

#include "uat/losses.hpp"
#include "uat/model.hpp"

namespace uat {

enum class TrainMode { baseline, uncertainty_aware };
enum class LrSchedule { fixed, exp_decay };

struct TrainConfig {
    int epochs = 300;
    int batch_size = 8;
    double lr_vae = 1e-3;
    double lr_clf = 1e-4;
    LrSchedule schedule = LrSchedule::fixed;
    // used when schedule == exp_decay: rate decays exponentially between these
    double lr_decay_start = 1e-2;
    double lr_decay_end = 1e-8;
    LossWeights weights;
    TrainMode mode = TrainMode::baseline;
    std::uint64_t seed = 42;
    // model dimensions not carried by the dataset
    int latent_dim = 8;
    int enc_hidden = 64;
    int dec_hidden = 64;
    int clf_hidden = 32;

    LossWeights effective_weights() const;  // baseline mode forces alpha = 0
    void validate() const;
};

struct TrainResult {
    ModelParams params;
    std::vector<LossBreakdown> trace;  // per-epoch means; two-phase runs append both phases
    std::uint64_t seed = 0;
    int epochs_run = 0;
};

// subjects must agree on frame dimensions; epochs = 0 returns the initial
// parameters unchanged. Throws numeric_error naming the epoch and term if the
// loss goes non-finite.
TrainResult train(const std::vector<const SegSequence*>& subjects, const TrainConfig& cfg);

// mean-mode prediction
struct Prediction {
    double p_pos = 0.0;
    int predicted = 0;
};
Prediction predict(const ModelParams& params, const SegSequence& record);

// (sensitivity + specificity) / 2; requires both classes present
double balanced_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace uat
