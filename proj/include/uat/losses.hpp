// losses.hpp - the four-term training objective
//
//   l_total = l_re + beta * l_kl + gamma * l_c + alpha * l_u
//
// l_re  mean per-pixel cross-entropy between input frames and reconstructions
// l_kl  KL divergence of the per-frame latent posteriors from a unit Gaussian
// l_c   binary cross-entropy of the response classifier
// l_u   pairwise margin term: penalises incorrect predictions whose confidence
//       is not below the corresponding correct predictions' by margin m
#pragma once

#include <vector>

#include "uat/data.hpp"
#include "uat/graph.hpp"
#include "uat/model.hpp"

namespace uat {

struct LossWeights {
    double beta = 1.0;    // KL weight
    double gamma = 1.0;   // classification weight
    double alpha = 0.0;   // uncertainty weight
    double margin = 0.0;  // hinge margin m

    void validate() const;  // all weights >= 0
    // grid-search domain: beta in [0.001,2], gamma in [0,2], alpha in [0.01,2]
    // or 0 (baseline), m in [0.01,1]
    void validate_grid_ranges() const;
};

// Per-batch partition of samples by predicted class vs label, at threshold
// 0.5 (exact tie resolves to negative). Membership is recomputed from current
// predictions each step and carries no gradient; the probability nodes do.
struct BatchOutcome {
    std::vector<NodePtr> p_pos, p_neg;  // per-sample scalar nodes
    std::vector<int> labels;
    std::vector<int> predicted;
    std::vector<int> tp, fp, tn, fn;  // index sets; together they partition the batch

    int n_fp() const { return static_cast<int>(fp.size()); }
    int n_fn() const { return static_cast<int>(fn.size()); }

    static BatchOutcome from(std::vector<NodePtr> p_pos, std::vector<NodePtr> p_neg,
                             std::vector<int> labels);
};

struct LossBreakdown {
    double l_re = 0, l_kl = 0, l_c = 0, l_u = 0, l_total = 0;
};

struct LossNodes {
    NodePtr l_re, l_kl, l_c, l_u, l_total;
    LossBreakdown values() const;
};

// mean per-pixel categorical cross-entropy over all frames/pixels of one subject
NodePtr recon_loss(const std::vector<NodePtr>& frame_logits, const SegSequence& target);

// mean over frames of 0.5 * sum_j (mu^2 + exp(logvar) - 1 - logvar)
NodePtr kl_loss(const NodePtr& mu, const NodePtr& logvar);

// batch mean of -[y ln P+ve + (1-y) ln P-ve], probabilities clamped to
// [1e-12, 1 - 1e-12] before the logs
NodePtr classification_loss(const BatchOutcome& batch);

// (1/N_FP) sum_{i in FP, j in TP} max(P+ve_i - P+ve_j + m, 0)
// + (1/N_FN) sum_{i in FN, j in TN} max(P-ve_i - P-ve_j + m, 0);
// a term with an empty incorrect set is 0. Gradients flow through both the
// incorrect sample i and the correct sample j of every active pair.
NodePtr uncertainty_loss(const BatchOutcome& batch, double margin);

// assembles all four terms for a batch of subject forwards
LossNodes total_loss(const std::vector<SubjectForward>& forwards,
                     const std::vector<const SegSequence*>& records,
                     const BatchOutcome& batch, const LossWeights& weights);

}  // namespace uat
