#include "uat/losses.hpp"

#include <cmath>

#include "uat/errors.hpp"

namespace uat {

void LossWeights::validate() const {
    if (beta < 0 || gamma < 0 || alpha < 0 || margin < 0)
        throw validation_error("loss weights must be >= 0");
}

void LossWeights::validate_grid_ranges() const {
    validate();
    if (beta < 0.001 || beta > 2.0)
        throw validation_error("beta outside grid range [0.001, 2]");
    if (gamma > 2.0) throw validation_error("gamma outside grid range [0, 2]");
    if (alpha != 0.0 && (alpha < 0.01 || alpha > 2.0))
        throw validation_error("alpha outside grid range [0.01, 2] (or 0 for baseline)");
    if (margin != 0.0 && (margin < 0.01 || margin > 1.0))
        throw validation_error("margin outside grid range [0.01, 1] (or 0 when unused)");
}

BatchOutcome BatchOutcome::from(std::vector<NodePtr> p_pos, std::vector<NodePtr> p_neg,
                                std::vector<int> labels) {
    if (p_pos.size() != labels.size() || p_neg.size() != labels.size())
        throw validation_error("batch outcome: probability and label counts disagree");
    BatchOutcome b;
    b.p_pos = std::move(p_pos);
    b.p_neg = std::move(p_neg);
    b.labels = std::move(labels);
    b.predicted.reserve(b.labels.size());
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
        if (b.labels[i] != 0 && b.labels[i] != 1)
            throw validation_error("batch outcome: labels must be 0 or 1");
        // tie at exactly 0.5 counts as a negative prediction
        const int pred = scalar_value(b.p_pos[i]) > 0.5 ? 1 : 0;
        b.predicted.push_back(pred);
        const int idx = static_cast<int>(i);
        if (pred == 1 && b.labels[i] == 1)
            b.tp.push_back(idx);
        else if (pred == 1 && b.labels[i] == 0)
            b.fp.push_back(idx);
        else if (pred == 0 && b.labels[i] == 0)
            b.tn.push_back(idx);
        else
            b.fn.push_back(idx);
    }
    return b;
}

LossBreakdown LossNodes::values() const {
    return {scalar_value(l_re), scalar_value(l_kl), scalar_value(l_c), scalar_value(l_u),
            scalar_value(l_total)};
}

namespace {

NodePtr accumulate(NodePtr& acc, const NodePtr& term) {
    acc = acc ? add(acc, term) : term;
    return acc;
}

}  // namespace

NodePtr recon_loss(const std::vector<NodePtr>& frame_logits, const SegSequence& target) {
    if (frame_logits.empty()) throw validation_error("recon loss: no frames");
    if (frame_logits.size() != target.frames.size())
        throw validation_error("recon loss: logit frame count " +
                               std::to_string(frame_logits.size()) + " vs target " +
                               std::to_string(target.frames.size()));
    const int n_pixels = target.height * target.width;
    const int c = target.n_classes;

    NodePtr total;
    for (std::size_t t = 0; t < frame_logits.size(); ++t) {
        const auto& logits = frame_logits[t];
        if (logits->value.shape != std::vector<int>{n_pixels, c})
            throw validation_error("recon loss: logits shape " + logits->value.shape_str() +
                                   " does not match frame size");
        Tensor mask = Tensor::zeros({n_pixels, c});
        for (int p = 0; p < n_pixels; ++p) {
            const std::uint8_t cls = target.frames[t][p];
            if (cls >= c) throw validation_error("recon loss: pixel class out of range");
            mask.data[static_cast<std::size_t>(p) * c + cls] = 1.0;
        }
        accumulate(total, dot_const(log_softmax_rows(logits), mask));
    }
    const double scale = -1.0 / (static_cast<double>(frame_logits.size()) * n_pixels);
    return mul_scalar(total, scale);
}

NodePtr kl_loss(const NodePtr& mu, const NodePtr& logvar) {
    if (!mu->value.same_shape(logvar->value))
        throw validation_error("kl loss: mu and logvar shapes disagree");
    const int t = mu->value.rows();
    // 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar), averaged over frames (rows)
    NodePtr inner = sub(add(mul(mu, mu), exp_(logvar)), add_scalar(logvar, 1.0));
    return mul_scalar(sum_all(inner), 0.5 / t);
}

namespace {
constexpr double kProbFloor = 1e-12;
}

NodePtr classification_loss(const BatchOutcome& batch) {
    const std::size_t n = batch.labels.size();
    if (n == 0) throw validation_error("classification loss: empty batch");
    NodePtr total;
    for (std::size_t i = 0; i < n; ++i) {
        const NodePtr& p = batch.labels[i] == 1 ? batch.p_pos[i] : batch.p_neg[i];
        accumulate(total, log_(clamp(p, kProbFloor, 1.0 - kProbFloor)));
    }
    return mul_scalar(total, -1.0 / static_cast<double>(n));
}

NodePtr uncertainty_loss(const BatchOutcome& batch, double margin) {
    if (margin < 0) throw validation_error("uncertainty loss: margin must be >= 0");

    NodePtr total;
    if (!batch.fp.empty() && !batch.tp.empty()) {
        NodePtr sum;
        for (int i : batch.fp)
            for (int j : batch.tp)
                accumulate(sum, relu(add_scalar(sub(batch.p_pos[i], batch.p_pos[j]), margin)));
        accumulate(total, mul_scalar(sum, 1.0 / batch.n_fp()));
    }
    if (!batch.fn.empty() && !batch.tn.empty()) {
        NodePtr sum;
        for (int i : batch.fn)
            for (int j : batch.tn)
                accumulate(sum, relu(add_scalar(sub(batch.p_neg[i], batch.p_neg[j]), margin)));
        accumulate(total, mul_scalar(sum, 1.0 / batch.n_fn()));
    }
    return total ? total : constant(Tensor::scalar(0.0));
}

LossNodes total_loss(const std::vector<SubjectForward>& forwards,
                     const std::vector<const SegSequence*>& records, const BatchOutcome& batch,
                     const LossWeights& weights) {
    weights.validate();
    const std::size_t n = forwards.size();
    if (n == 0) throw validation_error("total loss: empty batch");
    if (records.size() != n || batch.labels.size() != n)
        throw validation_error("total loss: forwards/records/batch sizes disagree");

    NodePtr re_sum, kl_sum;
    for (std::size_t i = 0; i < n; ++i) {
        accumulate(re_sum, recon_loss(forwards[i].recon_logits, *records[i]));
        accumulate(kl_sum, kl_loss(forwards[i].mu, forwards[i].logvar));
    }

    LossNodes out;
    out.l_re = mul_scalar(re_sum, 1.0 / static_cast<double>(n));
    out.l_kl = mul_scalar(kl_sum, 1.0 / static_cast<double>(n));
    out.l_c = classification_loss(batch);
    // alpha = 0 skips pair construction entirely, so baseline training builds
    // the exact same graph whichever mode requested it
    out.l_u = weights.alpha > 0.0 ? uncertainty_loss(batch, weights.margin)
                                  : constant(Tensor::scalar(0.0));
    NodePtr total = add(out.l_re, mul_scalar(out.l_kl, weights.beta));
    total = add(total, mul_scalar(out.l_c, weights.gamma));
    if (weights.alpha > 0.0) total = add(total, mul_scalar(out.l_u, weights.alpha));
    out.l_total = total;
    return out;
}

}  // namespace uat
