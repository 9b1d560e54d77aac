#include "uat/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "uat/errors.hpp"
#include "uat/rng.hpp"

namespace uat {

LossWeights TrainConfig::effective_weights() const {
    LossWeights w = weights;
    if (mode == TrainMode::baseline) w.alpha = 0.0;
    return w;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw validation_error("epochs must be >= 0");
    if (batch_size < 1) throw validation_error("batch_size must be >= 1");
    if (lr_vae <= 0 || lr_clf <= 0) throw validation_error("learning rates must be positive");
    if (lr_decay_start <= 0 || lr_decay_end <= 0 || lr_decay_end > lr_decay_start)
        throw validation_error("decay rates must satisfy 0 < end <= start");
    if (latent_dim < 1 || enc_hidden < 1 || dec_hidden < 1 || clf_hidden < 1)
        throw validation_error("model widths must be positive");
    weights.validate();
}

namespace {

// seed-stream ids local to training
enum : std::uint64_t {
    kStreamInitModel = 10,
    kStreamReinit = 11,
    kStreamShuffle = 12,
    kStreamNoise = 13,
};

class Adam {
public:
    explicit Adam(std::vector<NodePtr> params) : params_(std::move(params)) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const auto& p : params_) {
            m_.push_back(Tensor::zeros(p->value.shape));
            v_.push_back(Tensor::zeros(p->value.shape));
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, t_);
        const double bc2 = 1.0 - std::pow(kBeta2, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Node& p = *params_[i];
            if (p.grad.data.empty()) continue;  // unreachable from this loss
            double* m = m_[i].data.data();
            double* v = v_[i].data.data();
            double* w = p.value.data.data();
            const double* g = p.grad.data.data();
            const std::size_t n = p.value.data.size();
            for (std::size_t k = 0; k < n; ++k) {
                m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
                v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
                w[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + kEps);
            }
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<NodePtr> params_;
    std::vector<Tensor> m_, v_;
    int t_ = 0;
};

// epoch index is phase-local; exp decay sweeps start -> end across the phase
std::pair<double, double> epoch_rates(const TrainConfig& cfg, int epoch) {
    if (cfg.schedule == LrSchedule::fixed) return {cfg.lr_vae, cfg.lr_clf};
    double r = cfg.lr_decay_start;
    if (cfg.epochs > 1)
        r *= std::pow(cfg.lr_decay_end / cfg.lr_decay_start,
                      static_cast<double>(epoch) / (cfg.epochs - 1));
    return {r, r};
}

void check_finite(const LossBreakdown& vals, int global_epoch) {
    const std::pair<const char*, double> terms[] = {{"l_re", vals.l_re},
                                                    {"l_kl", vals.l_kl},
                                                    {"l_c", vals.l_c},
                                                    {"l_u", vals.l_u},
                                                    {"l_total", vals.l_total}};
    for (const auto& [name, v] : terms)
        if (!std::isfinite(v))
            throw numeric_error(std::string("non-finite ") + name + " at epoch " +
                                std::to_string(global_epoch));
}

void run_phase(ModelParams& params, const std::vector<const SegSequence*>& subjects,
               const TrainConfig& cfg, const LossWeights& weights, std::uint64_t phase,
               std::vector<LossBreakdown>& trace) {
    const int n = static_cast<int>(subjects.size());
    const auto& mc = params.config;

    Adam vae_opt(params.vae_params());
    Adam clf_opt(params.classifier_params());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const int global_epoch = static_cast<int>(trace.size());
        const auto [lr_vae, lr_clf] = epoch_rates(cfg, epoch);

        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg.seed, kStreamShuffle, phase,
                                    static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        LossBreakdown epoch_mean;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int end = std::min(start + cfg.batch_size, n);
            const int bs = end - start;

            std::vector<SubjectForward> forwards;
            std::vector<const SegSequence*> records;
            std::vector<NodePtr> p_pos, p_neg;
            std::vector<int> labels;
            forwards.reserve(static_cast<std::size_t>(bs));
            for (int b = start; b < end; ++b) {
                const int idx = order[b];
                // per-(epoch, subject) noise stream: batch composition has no
                // effect on the draws a subject sees
                Rng noise_rng(derive_seed(cfg.seed, kStreamNoise, phase,
                                          static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(idx)));
                Tensor noise = Tensor::zeros({mc.n_frames, mc.latent_dim});
                for (auto& v : noise.data) v = noise_rng.normal();

                forwards.push_back(forward_subject(*subjects[idx], params, noise));
                records.push_back(subjects[idx]);
                p_pos.push_back(forwards.back().p_pos);
                p_neg.push_back(forwards.back().p_neg);
                labels.push_back(subjects[idx]->label);
            }

            BatchOutcome batch = BatchOutcome::from(std::move(p_pos), std::move(p_neg),
                                                    std::move(labels));
            LossNodes loss = total_loss(forwards, records, batch, weights);
            const LossBreakdown vals = loss.values();
            check_finite(vals, global_epoch);

            backward(loss.l_total);
            vae_opt.step(lr_vae);
            clf_opt.step(lr_clf);

            const double w = static_cast<double>(bs) / n;
            epoch_mean.l_re += w * vals.l_re;
            epoch_mean.l_kl += w * vals.l_kl;
            epoch_mean.l_c += w * vals.l_c;
            epoch_mean.l_u += w * vals.l_u;
            epoch_mean.l_total += w * vals.l_total;
        }
        if (!params.all_finite())
            throw numeric_error("non-finite parameters at epoch " +
                                std::to_string(global_epoch));
        trace.push_back(epoch_mean);
    }
}

}  // namespace

TrainResult train(const std::vector<const SegSequence*>& subjects, const TrainConfig& cfg) {
    cfg.validate();
    if (subjects.empty()) throw validation_error("training set is empty");
    for (const auto* s : subjects)
        if (s == nullptr) throw validation_error("training set contains a null record");

    const SegSequence& first = *subjects[0];
    ModelConfig mc;
    mc.frame_height = first.height;
    mc.frame_width = first.width;
    mc.n_classes = first.n_classes;
    mc.n_frames = first.n_frames;
    mc.latent_dim = cfg.latent_dim;
    mc.enc_hidden = cfg.enc_hidden;
    mc.dec_hidden = cfg.dec_hidden;
    mc.clf_hidden = cfg.clf_hidden;
    mc.validate();
    for (const auto* s : subjects)
        if (s->height != first.height || s->width != first.width ||
            s->n_classes != first.n_classes || s->n_frames != first.n_frames)
            throw validation_error("training subjects disagree on frame dimensions");

    TrainResult result;
    result.seed = cfg.seed;
    result.params = ModelParams::init(mc, derive_seed(cfg.seed, kStreamInitModel));
    if (cfg.epochs == 0) return result;

    const LossWeights w = cfg.effective_weights();
    w.validate();
    LossWeights phase1 = w;
    phase1.alpha = 0.0;
    run_phase(result.params, subjects, cfg, phase1, 0, result.trace);

    // the margin term trains on top of the fitted representation: keep the
    // VAE, restart the classifier head, train everything with the full loss
    if (w.alpha > 0.0) {
        result.params.reinit_classifier(derive_seed(cfg.seed, kStreamReinit));
        run_phase(result.params, subjects, cfg, w, 1, result.trace);
    }
    result.epochs_run = static_cast<int>(result.trace.size());
    return result;
}

Prediction predict(const ModelParams& params, const SegSequence& record) {
    const SubjectForward fwd = forward_subject(record, params);
    Prediction p;
    p.p_pos = fwd.p_positive();
    p.predicted = fwd.predicted_positive() ? 1 : 0;
    return p;
}

double balanced_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw validation_error("balanced accuracy: prediction and label counts disagree");
    int tp = 0, fn = 0, fp = 0, tn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw validation_error("balanced accuracy: labels must be 0 or 1");
        if (predictions[i] != 0 && predictions[i] != 1)
            throw validation_error("balanced accuracy: predictions must be 0 or 1");
        if (labels[i] == 1)
            (predictions[i] == 1 ? tp : fn) += 1;
        else
            (predictions[i] == 0 ? tn : fp) += 1;
    }
    if (tp + fn == 0 || tn + fp == 0)
        throw validation_error("balanced accuracy undefined: only one class present");
    const double sens = static_cast<double>(tp) / (tp + fn);
    const double spec = static_cast<double>(tn) / (tn + fp);
    return (sens + spec) / 2.0;
}

}  // namespace uat
