// model.hpp - per-frame VAE with a latent-space classifier head
//
// Pipeline: each one-hot frame is encoded to a Gaussian latent (mu, logvar),
// the decoder reconstructs per-pixel class logits from the latent, and a
// two-logit classifier head reads the concatenation of all frame latents.
// Frames enter as flattened one-hot vectors through dense layers.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uat/data.hpp"
#include "uat/graph.hpp"

namespace uat {

struct ModelConfig {
    int frame_height = 16;
    int frame_width = 16;
    int n_classes = 4;  // background, inner pool, ring, side pool
    int n_frames = 8;
    int latent_dim = 8;
    int enc_hidden = 64;
    int dec_hidden = 64;
    int clf_hidden = 32;  // grid values are 32 or 64

    int input_dim() const { return frame_height * frame_width * n_classes; }
    int n_pixels() const { return frame_height * frame_width; }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// All trainable tensors, kept as graph leaves so rebuilt per-step graphs share
// them. Immutable during inference; training mutates one owned copy.
struct ModelParams {
    ModelConfig config;
    NodePtr enc_w, enc_b;        // input -> encoder hidden
    NodePtr mu_w, mu_b;          // hidden -> latent mean
    NodePtr logvar_w, logvar_b;  // hidden -> latent log-variance
    NodePtr dec_w1, dec_b1;      // latent -> decoder hidden
    NodePtr dec_w2, dec_b2;      // hidden -> per-pixel class logits
    NodePtr clf_w1, clf_b1;      // concatenated latents -> classifier hidden
    NodePtr clf_w2, clf_b2;      // hidden -> two output logits

    static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

    std::vector<NodePtr> vae_params() const;
    std::vector<NodePtr> classifier_params() const;
    std::vector<std::pair<std::string, NodePtr>> named_params() const;  // declared order
    std::vector<NodePtr> all_params() const;

    ModelParams clone() const;
    void reinit_classifier(std::uint64_t seed);
    bool all_finite() const;
};

struct ClassifierOut {
    NodePtr probs;  // [1 x 2] softmax row: (P+ve, P-ve)
    NodePtr p_pos;  // [1,1]
    NodePtr p_neg;  // [1,1]
};

struct SubjectForward {
    NodePtr mu;                         // [T x d]
    NodePtr logvar;                     // [T x d]
    std::vector<NodePtr> latents;       // per frame [1 x d]; what the classifier consumed
    std::vector<NodePtr> recon_logits;  // per frame [n_pixels x C]
    NodePtr p_pos, p_neg;               // scalar class probabilities

    double p_positive() const { return scalar_value(p_pos); }
    double p_negative() const { return scalar_value(p_neg); }
    // exact tie at 0.5 resolves to non-responder
    bool predicted_positive() const { return p_positive() > 0.5; }
};

// frame is a one-hot tensor [H, W, C]; exactly one class per pixel
std::pair<NodePtr, NodePtr> encode(const Tensor& frame, const ModelParams& params);

// z = mu + exp(0.5 * logvar) .* noise
NodePtr reparameterize(const NodePtr& mu, const NodePtr& logvar, const Tensor& noise);

// per-pixel class logits [n_pixels x C]
NodePtr decode(const NodePtr& z, const ModelParams& params);

// softmax over two logits from a one-hidden-layer head on [T x d] latents
ClassifierOut classify(const NodePtr& latents, const ModelParams& params);

// Mean mode (noise absent): classifier and decoder consume the per-frame mu.
// Sampled mode: both consume z = reparameterize(mu, logvar, noise_row), with
// noise as a [T x d] tensor of standard normal draws.
SubjectForward forward_subject(const SegSequence& record, const ModelParams& params,
                               const std::optional<Tensor>& noise = std::nullopt);

// one-hot helpers
Tensor frame_to_onehot(const std::vector<std::uint8_t>& pixels, int height, int width,
                       int n_classes);

// Checkpoint: one structured-text header line (config, seed, epoch, tensor
// manifest) followed by every parameter tensor in declared order as 64-bit
// little-endian payload. Round trip is bit-exact.
struct Checkpoint {
    ModelParams params;
    std::uint64_t seed = 0;
    int epoch = 0;
};
void save_checkpoint(const std::string& path, const ModelParams& params,
                     std::uint64_t seed, int epoch);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace uat
