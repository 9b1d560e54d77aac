#include "uat/gradcheck.hpp"

#include <chrono>
#include <cstring>
#include <functional>
#include <sstream>
#include <utility>

#include "uat/errors.hpp"
#include "uat/graph.hpp"
#include "uat/losses.hpp"
#include "uat/model.hpp"
#include "uat/rng.hpp"

namespace uat {

namespace {

using Builder = std::function<NodePtr(const NodePtr&)>;
// one randomized problem: input tensor plus the scalar function under test
using Gen = std::function<std::pair<Tensor, Builder>(Rng&)>;

Tensor rand_tensor(Rng& rng, const std::vector<int>& shape, double lo, double hi) {
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// probe weights bounded away from zero so every output component matters
Tensor rand_weights(Rng& rng, const std::vector<int>& shape) {
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.data) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);
    return t;
}

// values kept clear of a kink at `away_from` by at least `margin`
Tensor rand_away(Rng& rng, const std::vector<int>& shape, double lo, double hi,
                 std::initializer_list<double> kinks, double margin) {
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.data) {
        for (int tries = 0; tries < 1000; ++tries) {
            v = rng.uniform(lo, hi);
            bool clear = true;
            for (double k : kinks) clear = clear && std::fabs(v - k) >= margin;
            if (clear) break;
        }
    }
    return t;
}

int dim(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Runs one instance, redrawing until every nonzero analytic-gradient
// component clears `min_grad`. Components that small sit below the
// finite-difference noise floor, where the relative-error formula is
// meaningless; the redraw keeps the check honest instead of loosening it.
double checked_instance(Rng& rng, const Gen& gen, double eps, double min_grad) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        auto [x, build] = gen(rng);
        NodePtr input = leaf(x);
        backward(build(input));
        if (input->grad.data.size() != x.data.size()) continue;  // input unused; redraw
        bool ok = true;
        for (double g : input->grad.data)
            ok = ok && (g == 0.0 || std::fabs(g) >= min_grad);
        if (!ok) continue;
        return grad_check(build, x, eps);
    }
    throw numeric_error("grad check: no well-conditioned instance after 200 draws");
}

// extracts row r of a rank-2 node using only verified primitives
NodePtr take_row(const NodePtr& m, int r) { return embed_sum(m, {r}); }

// --- elementary op cases ---------------------------------------------------

std::vector<std::pair<const char*, Gen>> op_cases() {
    std::vector<std::pair<const char*, Gen>> cases;

    cases.emplace_back("add", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        NodePtr c = constant(rand_tensor(rng, shape, -2, 2));
        Tensor w = rand_weights(rng, shape);
        return {x, [c, w](const NodePtr& a) { return dot_const(add(add(a, c), a), w); }};
    });

    cases.emplace_back("sub", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        NodePtr c = constant(rand_tensor(rng, shape, -2, 2));
        Tensor w = rand_weights(rng, shape);
        return {x, [c, w](const NodePtr& a) { return dot_const(sub(c, sub(a, c)), w); }};
    });

    cases.emplace_back("mul", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, 0.3, 2);  // positive keeps products off zero
        NodePtr c = constant(rand_weights(rng, shape));
        Tensor w = rand_weights(rng, shape);
        return {x, [c, w](const NodePtr& a) { return dot_const(mul(a, mul(a, c)), w); }};
    });

    cases.emplace_back("scalar_broadcast", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        const double s1 = rng.uniform(-2, 2);
        const double s2 = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.5, 1.5);
        const double s3 = rng.uniform(-2, 2);
        Tensor w = rand_weights(rng, shape);
        return {x, [=](const NodePtr& a) {
                    return dot_const(add_scalar(mul_scalar(sub_from_scalar(s1, a), s2), s3), w);
                }};
    });

    cases.emplace_back("matmul_left", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int n = dim(rng, 1, 3), k = dim(rng, 1, 4), m = dim(rng, 1, 3);
        Tensor x = rand_tensor(rng, {n, k}, -2, 2);
        NodePtr c = constant(rand_weights(rng, {k, m}));
        Tensor w = rand_weights(rng, {n, m});
        return {x, [c, w](const NodePtr& a) { return dot_const(matmul(a, c), w); }};
    });

    cases.emplace_back("matmul_right", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int n = dim(rng, 1, 3), k = dim(rng, 1, 4), m = dim(rng, 1, 3);
        Tensor x = rand_tensor(rng, {k, m}, -2, 2);
        NodePtr c = constant(rand_weights(rng, {n, k}));
        Tensor w = rand_weights(rng, {n, m});
        return {x, [c, w](const NodePtr& a) { return dot_const(matmul(c, a), w); }};
    });

    cases.emplace_back("matmul_self", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int n = dim(rng, 2, 3);
        Tensor x = rand_tensor(rng, {n, n}, -2, 2);
        Tensor w = rand_weights(rng, {n, n});
        return {x, [w](const NodePtr& a) { return dot_const(matmul(a, a), w); }};
    });

    cases.emplace_back("embed_sum", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int r = dim(rng, 3, 6), c = dim(rng, 1, 4);
        Tensor x = rand_tensor(rng, {r, c}, -2, 2);
        std::vector<int> idx(static_cast<std::size_t>(dim(rng, 2, 8)));
        for (auto& i : idx) i = static_cast<int>(rng.below(static_cast<std::uint64_t>(r)));
        Tensor w = rand_weights(rng, {1, c});
        return {x, [idx, w](const NodePtr& a) { return dot_const(embed_sum(a, idx), w); }};
    });

    cases.emplace_back("relu", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_away(rng, shape, -2, 2, {0.0}, 0.05);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(relu(a), w); }};
    });

    cases.emplace_back("sigmoid", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, -2.5, 2.5);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(sigmoid(a), w); }};
    });

    cases.emplace_back("exp", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(exp_(a), w); }};
    });

    cases.emplace_back("log", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, 0.2, 2.5);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(log_(a), w); }};
    });

    cases.emplace_back("softmax", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 2, 5)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(softmax_rows(a), w); }};
    });

    cases.emplace_back("log_softmax", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 2, 5)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(log_softmax_rows(a), w); }};
    });

    cases.emplace_back("sum_mean", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_tensor(rng, shape, -2, 2);
        const double s1 = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.5, 1.5);
        const double s2 = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.5, 1.5);
        return {x, [=](const NodePtr& a) {
                    return add(mul_scalar(sum_all(a), s1), mul_scalar(mean_all(a), s2));
                }};
    });

    cases.emplace_back("reshape", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int r = dim(rng, 1, 3), c = dim(rng, 1, 4);
        Tensor x = rand_tensor(rng, {r, c}, -2, 2);
        Tensor w = rand_weights(rng, {c, r});
        return {x, [=](const NodePtr& a) { return dot_const(reshape(a, {c, r}), w); }};
    });

    cases.emplace_back("concat_cols", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int c = dim(rng, 1, 4), cc = dim(rng, 1, 3);
        Tensor x = rand_tensor(rng, {1, c}, -2, 2);
        NodePtr mid = constant(rand_tensor(rng, {1, cc}, -2, 2));
        Tensor w = rand_weights(rng, {1, 2 * c + cc});
        return {x, [mid, w](const NodePtr& a) {
                    return dot_const(concat_cols({a, mid, a}), w);
                }};
    });

    cases.emplace_back("concat_rows", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int r = dim(rng, 1, 3), c = dim(rng, 1, 4), rc = dim(rng, 1, 2);
        Tensor x = rand_tensor(rng, {r, c}, -2, 2);
        NodePtr top = constant(rand_tensor(rng, {rc, c}, -2, 2));
        Tensor w = rand_weights(rng, {rc + 2 * r, c});
        return {x, [top, w](const NodePtr& a) {
                    return dot_const(concat_rows({top, a, a}), w);
                }};
    });

    cases.emplace_back("clamp", [](Rng& rng) -> std::pair<Tensor, Builder> {
        const std::vector<int> shape{dim(rng, 1, 3), dim(rng, 1, 4)};
        Tensor x = rand_away(rng, shape, -1, 1, {-0.5, 0.5}, 0.05);
        Tensor w = rand_weights(rng, shape);
        return {x, [w](const NodePtr& a) { return dot_const(clamp(a, -0.5, 0.5), w); }};
    });

    return cases;
}

// --- loss-term cases --------------------------------------------------------

SegSequence random_record(Rng& rng, int t, int h, int w, int c, int label) {
    SegSequence rec;
    rec.id = "x";
    rec.n_frames = t;
    rec.height = h;
    rec.width = w;
    rec.n_classes = c;
    rec.label = label;
    for (int f = 0; f < t; ++f) {
        std::vector<std::uint8_t> frame(static_cast<std::size_t>(h) * w);
        for (auto& px : frame)
            px = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(c)));
        rec.frames.push_back(std::move(frame));
    }
    return rec;
}

Gen recon_case() {
    return [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int t = 2, h = 2, w = 2, c = 4, n_pixels = h * w;
        SegSequence rec = random_record(rng, t, h, w, c, 0);
        Tensor x = rand_tensor(rng, {t * n_pixels, c}, -2, 2);
        return {x, [rec, t, n_pixels](const NodePtr& a) {
                    std::vector<NodePtr> frames;
                    for (int f = 0; f < t; ++f) {
                        std::vector<NodePtr> rows;
                        for (int p = 0; p < n_pixels; ++p)
                            rows.push_back(take_row(a, f * n_pixels + p));
                        frames.push_back(concat_rows(rows));
                    }
                    return recon_loss(frames, rec);
                }};
    };
}

Gen kl_case() {
    return [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int d = dim(rng, 2, 5);
        Tensor x = Tensor::zeros({2, d});
        for (int j = 0; j < d; ++j) {
            x.at(0, j) = rng.uniform(-2, 2);    // mu
            x.at(1, j) = rng.uniform(-1.5, 1.5);  // logvar
        }
        return {x, [](const NodePtr& a) { return kl_loss(take_row(a, 0), take_row(a, 1)); }};
    };
}

// shared helper: p_pos slices of x plus complementary p_neg
BatchOutcome outcome_from_probs(const NodePtr& x, const std::vector<int>& labels) {
    std::vector<NodePtr> p_pos, p_neg;
    const int n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i) {
        Tensor e = Tensor::zeros({1, n});
        e.data[static_cast<std::size_t>(i)] = 1.0;
        NodePtr p = dot_const(x, e);
        p_pos.push_back(p);
        p_neg.push_back(sub_from_scalar(1.0, p));
    }
    return BatchOutcome::from(std::move(p_pos), std::move(p_neg), labels);
}

Gen classification_case() {
    return [](Rng& rng) -> std::pair<Tensor, Builder> {
        const int n = dim(rng, 2, 6);
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
        Tensor x = rand_away(rng, {1, n}, 0.05, 0.95, {0.5}, 5e-3);
        return {x, [labels](const NodePtr& a) {
                    return classification_loss(outcome_from_probs(a, labels));
                }};
    };
}

Gen hinge_case() {
    return [](Rng& rng) -> std::pair<Tensor, Builder> {
        const double m = rng.uniform(0.1, 0.5);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const int n = dim(rng, 4, 8);
            std::vector<int> labels;
            for (int i = 0; i < n; ++i) labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
            Tensor x = rand_away(rng, {1, n}, 0.05, 0.95, {0.5}, 5e-3);

            // recompute membership the way BatchOutcome will, then insist the
            // instance has at least one strictly active pair and every hinge
            // input is clear of the kink
            std::vector<int> tp, fp, tn, fn;
            for (int i = 0; i < n; ++i) {
                const bool pred = x.data[i] > 0.5;
                if (pred && labels[i] == 1) tp.push_back(i);
                else if (pred && labels[i] == 0) fp.push_back(i);
                else if (!pred && labels[i] == 0) tn.push_back(i);
                else fn.push_back(i);
            }
            bool active = false, clear = true;
            for (int i : fp)
                for (int j : tp) {
                    const double v = x.data[i] - x.data[j] + m;
                    clear = clear && std::fabs(v) >= 0.01;
                    active = active || v >= 0.01;
                }
            for (int i : fn)
                for (int j : tn) {
                    const double v = (1 - x.data[i]) - (1 - x.data[j]) + m;
                    clear = clear && std::fabs(v) >= 0.01;
                    active = active || v >= 0.01;
                }
            if (!clear || !active) continue;

            return {x, [labels, m](const NodePtr& a) {
                        return uncertainty_loss(outcome_from_probs(a, labels), m);
                    }};
        }
        throw numeric_error("hinge grad check: no active-pair instance after 1000 draws");
    };
}

// --- full-objective case -----------------------------------------------------
//
// One instance checks the total loss's gradient with respect to one parameter
// tensor (cycled by instance index) on a fresh random 4-subject batch in
// sampled mode, with every term active. Instances are redrawn until the batch
// is well-conditioned: stable outcome membership, at least one active hinge
// pair, every relu input clear of its kink, and no sub-noise-floor gradients.

struct TotalLossProblem {
    ModelConfig mc;
    std::vector<SegSequence> records;
    std::vector<Tensor> noises;
    LossWeights weights;
};

LossNodes build_total_loss(const TotalLossProblem& prob, const ModelParams& params) {
    std::vector<SubjectForward> forwards;
    std::vector<const SegSequence*> recs;
    std::vector<NodePtr> p_pos, p_neg;
    std::vector<int> labels;
    for (std::size_t i = 0; i < prob.records.size(); ++i) {
        forwards.push_back(forward_subject(prob.records[i], params, prob.noises[i]));
        recs.push_back(&prob.records[i]);
        p_pos.push_back(forwards.back().p_pos);
        p_neg.push_back(forwards.back().p_neg);
        labels.push_back(prob.records[i].label);
    }
    BatchOutcome batch = BatchOutcome::from(std::move(p_pos), std::move(p_neg),
                                            std::move(labels));
    return total_loss(forwards, recs, batch, prob.weights);
}

// params with every tensor frozen except slot k, which is the builder's input
ModelParams params_with_slot(const ModelParams& base, int k, const NodePtr& input) {
    ModelParams p = base;
    NodePtr* slots[] = {&p.enc_w,  &p.enc_b,  &p.mu_w,   &p.mu_b,   &p.logvar_w,
                        &p.logvar_b, &p.dec_w1, &p.dec_b1, &p.dec_w2, &p.dec_b2,
                        &p.clf_w1, &p.clf_b1, &p.clf_w2, &p.clf_b2};
    for (int i = 0; i < 14; ++i)
        *slots[i] = i == k ? input : constant((*slots[i])->value);
    return p;
}

double total_loss_instance(Rng& rng, int slot) {
    TotalLossProblem prob;
    prob.mc.frame_height = 2;
    prob.mc.frame_width = 2;
    prob.mc.n_classes = 4;
    prob.mc.n_frames = 2;
    prob.mc.latent_dim = 2;
    prob.mc.enc_hidden = 3;
    prob.mc.dec_hidden = 3;
    prob.mc.clf_hidden = 3;
    prob.weights = {0.7, 0.9, 0.5, 0.3};

    for (int attempt = 0; attempt < 500; ++attempt) {
        prob.records.clear();
        prob.noises.clear();
        const int labels[4] = {1, 1, 0, 0};
        for (int i = 0; i < 4; ++i) {
            prob.records.push_back(random_record(rng, prob.mc.n_frames, prob.mc.frame_height,
                                                 prob.mc.frame_width, prob.mc.n_classes,
                                                 labels[i]));
            Tensor noise = Tensor::zeros({prob.mc.n_frames, prob.mc.latent_dim});
            for (auto& v : noise.data) v = rng.normal();
            prob.noises.push_back(std::move(noise));
        }
        ModelParams base = ModelParams::init(prob.mc, rng.next_u64());

        // condition screen on the unperturbed graph
        LossNodes loss = build_total_loss(prob, base);
        std::vector<double> probs;
        bool ok = true;
        std::vector<int> tp, fp, tn, fn;
        {
            // recover per-subject probabilities from a fresh forward pass
            for (int i = 0; i < 4 && ok; ++i) {
                const SubjectForward f = forward_subject(prob.records[i], base,
                                                         prob.noises[i]);
                const double p = f.p_positive();
                probs.push_back(p);
                ok = ok && p >= 0.02 && p <= 0.98 && std::fabs(p - 0.5) >= 5e-3;
                const bool pred = p > 0.5;
                if (pred && labels[i] == 1) tp.push_back(i);
                else if (pred && labels[i] == 0) fp.push_back(i);
                else if (!pred && labels[i] == 0) tn.push_back(i);
                else fn.push_back(i);
            }
        }
        if (ok) {
            bool active = false;
            for (int i : fp)
                for (int j : tp) {
                    const double v = probs[i] - probs[j] + prob.weights.margin;
                    ok = ok && std::fabs(v) >= 0.01;
                    active = active || v >= 0.01;
                }
            for (int i : fn)
                for (int j : tn) {
                    const double v = (1 - probs[i]) - (1 - probs[j]) + prob.weights.margin;
                    ok = ok && std::fabs(v) >= 0.01;
                    active = active || v >= 0.01;
                }
            ok = ok && active;
        }
        if (ok) {
            for (Node* n : topo_order(loss.l_total)) {
                if (std::strcmp(n->op, "relu") != 0) continue;
                for (double v : n->parents[0]->value.data) ok = ok && std::fabs(v) >= 0.01;
                if (!ok) break;
            }
        }
        if (ok) {
            backward(loss.l_total);
            for (const auto& p : base.all_params()) {
                for (double g : p->grad.data) ok = ok && (g == 0.0 || std::fabs(g) >= 1e-6);
                if (!ok) break;
            }
        }
        if (!ok) continue;

        const Tensor x = base.all_params()[static_cast<std::size_t>(slot)]->value;
        Builder build = [&prob, &base, slot](const NodePtr& input) {
            const ModelParams p = params_with_slot(base, slot, input);
            return build_total_loss(prob, p).l_total;
        };
        return grad_check(build, x, 1e-4);
    }
    throw numeric_error("total loss grad check: no well-conditioned batch after 500 draws");
}

}  // namespace

GradCheckReport run_grad_checks(int instances, double tolerance, std::uint64_t seed) {
    if (instances < 1) throw validation_error("grad check: instances must be >= 1");
    if (tolerance <= 0) throw validation_error("grad check: tolerance must be positive");

    const auto t0 = std::chrono::steady_clock::now();
    GradCheckReport report;
    report.tolerance = tolerance;

    std::uint64_t case_id = 0;
    auto run_case = [&](const std::string& name, const std::function<double(Rng&, int)>& f) {
        GradCheckCase c;
        c.name = name;
        c.instances = instances;
        Rng rng(derive_seed(seed, case_id++));
        for (int i = 0; i < instances; ++i) c.max_error = std::max(c.max_error, f(rng, i));
        c.passed = c.max_error < tolerance;
        report.all_passed = report.all_passed && c.passed;
        report.cases.push_back(std::move(c));
    };

    for (const auto& [name, gen] : op_cases())
        run_case(name, [&gen](Rng& rng, int) { return checked_instance(rng, gen, 1e-5, 1e-6); });

    const Gen recon = recon_case();
    run_case("recon_loss",
             [&recon](Rng& rng, int) { return checked_instance(rng, recon, 1e-5, 1e-6); });
    const Gen kl = kl_case();
    run_case("kl_loss", [&kl](Rng& rng, int) { return checked_instance(rng, kl, 1e-5, 1e-6); });
    const Gen clf = classification_case();
    run_case("classification_loss",
             [&clf](Rng& rng, int) { return checked_instance(rng, clf, 1e-5, 1e-6); });
    const Gen hinge = hinge_case();
    run_case("uncertainty_loss",
             [&hinge](Rng& rng, int) { return checked_instance(rng, hinge, 1e-5, 1e-6); });
    run_case("total_loss",
             [](Rng& rng, int i) { return total_loss_instance(rng, i % 14); });

    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string format_grad_report(const GradCheckReport& report) {
    std::ostringstream out;
    for (const auto& c : report.cases) {
        out << (c.passed ? "pass" : "FAIL") << "  " << c.name;
        for (std::size_t pad = c.name.size(); pad < 24; ++pad) out << ' ';
        out << "max rel err " << c.max_error << " over " << c.instances << " instances\n";
    }
    out << (report.all_passed ? "all passed" : "FAILURES") << " (tolerance "
        << report.tolerance << ", " << report.seconds << " s)\n";
    return out.str();
}

}  // namespace uat
