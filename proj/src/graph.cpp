#include "uat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace uat {

namespace {

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    return n;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw validation_error(std::string(op) + ": shape mismatch " + a->value.shape_str() +
                               " vs " + b->value.shape_str());
}

void check_rank2(const NodePtr& a, const char* op) {
    if (a->value.rank() != 2)
        throw validation_error(std::string(op) + ": expected rank-2 tensor, got " +
                               a->value.shape_str());
}

}  // namespace

NodePtr leaf(Tensor value) {
    auto n = std::make_shared<Node>();
    n->op = "leaf";
    n->value = std::move(value);
    n->requires_grad = true;
    return n;
}

NodePtr constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->op = "const";
    n->value = std::move(value);
    n->requires_grad = false;
    return n;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    return make_node("add", std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            pa.grad.data[i] += n.grad.data[i];
            pb.grad.data[i] += n.grad.data[i];
        }
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return make_node("sub", std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            pa.grad.data[i] += n.grad.data[i];
            pb.grad.data[i] -= n.grad.data[i];
        }
    });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
    return make_node("mul", std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            pa.grad.data[i] += n.grad.data[i] * pb.value.data[i];
            pb.grad.data[i] += n.grad.data[i] * pa.value.data[i];
        }
    });
}

NodePtr add_scalar(const NodePtr& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v += s;
    return make_node("add_scalar", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) pa.grad.data[i] += n.grad.data[i];
    });
}

NodePtr mul_scalar(const NodePtr& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v *= s;
    return make_node("mul_scalar", std::move(out), {a}, [s](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i)
            pa.grad.data[i] += s * n.grad.data[i];
    });
}

NodePtr sub_from_scalar(double s, const NodePtr& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = s - v;
    return make_node("sub_from_scalar", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) pa.grad.data[i] -= n.grad.data[i];
    });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    check_rank2(a, "matmul");
    check_rank2(b, "matmul");
    if (a->value.cols() != b->value.rows())
        throw validation_error("matmul: inner dimensions disagree, " + a->value.shape_str() +
                               " x " + b->value.shape_str());
    const int n = a->value.rows(), k = a->value.cols(), m = b->value.cols();
    Tensor out = Tensor::zeros({n, m});
    const double* A = a->value.data.data();
    const double* B = b->value.data.data();
    double* C = out.data.data();
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            const double* Bp = B + p * m;
            double* Ci = C + i * m;
            for (int j = 0; j < m; ++j) Ci[j] += aip * Bp[j];
        }
    return make_node("matmul", std::move(out), {a, b}, [n, k, m](Node& node) {
        Node& pa = *node.parents[0];
        Node& pb = *node.parents[1];
        const double* G = node.grad.data.data();
        // dA = G * B^T
        if (pa.requires_grad) {
            const double* B = pb.value.data.data();
            double* dA = pa.grad.data.data();
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < k; ++p) {
                    const double* Gi = G + i * m;
                    const double* Bp = B + p * m;
                    double acc = 0.0;
                    for (int j = 0; j < m; ++j) acc += Gi[j] * Bp[j];
                    dA[i * k + p] += acc;
                }
        }
        // dB = A^T * G
        if (pb.requires_grad) {
            const double* A = pa.value.data.data();
            double* dB = pb.grad.data.data();
            for (int i = 0; i < n; ++i) {
                const double* Gi = G + i * m;
                for (int p = 0; p < k; ++p) {
                    const double aip = A[i * k + p];
                    double* dBp = dB + p * m;
                    for (int j = 0; j < m; ++j) dBp[j] += aip * Gi[j];
                }
            }
        }
    });
}

NodePtr embed_sum(const NodePtr& table, std::vector<int> indices) {
    check_rank2(table, "embed_sum");
    const int rows = table->value.rows(), cols = table->value.cols();
    for (int idx : indices)
        if (idx < 0 || idx >= rows)
            throw validation_error("embed_sum: index out of range for table " +
                                   table->value.shape_str());
    Tensor out = Tensor::zeros({1, cols});
    for (int idx : indices) {
        const double* src = table->value.data.data() + static_cast<std::size_t>(idx) * cols;
        for (int j = 0; j < cols; ++j) out.data[j] += src[j];
    }
    return make_node("embed_sum", std::move(out), {table},
                     [ix = std::move(indices), cols](Node& n) {
                         Node& pt = *n.parents[0];
                         const double* g = n.grad.data.data();
                         for (int idx : ix) {
                             double* dst = pt.grad.data.data() + static_cast<std::size_t>(idx) * cols;
                             for (int j = 0; j < cols; ++j) dst[j] += g[j];
                         }
                     });
}

NodePtr relu(const NodePtr& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make_node("relu", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i)
            if (pa.value.data[i] > 0.0) pa.grad.data[i] += n.grad.data[i];
    });
}

NodePtr sigmoid(const NodePtr& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return make_node("sigmoid", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            const double s = n.value.data[i];
            pa.grad.data[i] += n.grad.data[i] * s * (1.0 - s);
        }
    });
}

NodePtr exp_(const NodePtr& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::exp(v);
    return make_node("exp", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i)
            pa.grad.data[i] += n.grad.data[i] * n.value.data[i];
    });
}

NodePtr log_(const NodePtr& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::log(v);
    return make_node("log", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i)
            pa.grad.data[i] += n.grad.data[i] / pa.value.data[i];
    });
}

NodePtr softmax_rows(const NodePtr& a) {
    check_rank2(a, "softmax_rows");
    const int r = a->value.rows(), c = a->value.cols();
    Tensor out = a->value;
    for (int i = 0; i < r; ++i) {
        double* row = out.data.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < c; ++j) row[j] /= sum;
    }
    return make_node("softmax", std::move(out), {a}, [r, c](Node& n) {
        Node& pa = *n.parents[0];
        for (int i = 0; i < r; ++i) {
            const double* s = n.value.data.data() + static_cast<std::size_t>(i) * c;
            const double* g = n.grad.data.data() + static_cast<std::size_t>(i) * c;
            double* dx = pa.grad.data.data() + static_cast<std::size_t>(i) * c;
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += g[j] * s[j];
            for (int j = 0; j < c; ++j) dx[j] += s[j] * (g[j] - dot);
        }
    });
}

NodePtr log_softmax_rows(const NodePtr& a) {
    check_rank2(a, "log_softmax_rows");
    const int r = a->value.rows(), c = a->value.cols();
    Tensor out = a->value;
    for (int i = 0; i < r; ++i) {
        double* row = out.data.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        for (int j = 0; j < c; ++j) row[j] -= lse;
    }
    return make_node("log_softmax", std::move(out), {a}, [r, c](Node& n) {
        Node& pa = *n.parents[0];
        for (int i = 0; i < r; ++i) {
            const double* ls = n.value.data.data() + static_cast<std::size_t>(i) * c;
            const double* g = n.grad.data.data() + static_cast<std::size_t>(i) * c;
            double* dx = pa.grad.data.data() + static_cast<std::size_t>(i) * c;
            double gsum = 0.0;
            for (int j = 0; j < c; ++j) gsum += g[j];
            for (int j = 0; j < c; ++j) dx[j] += g[j] - std::exp(ls[j]) * gsum;
        }
    });
}

NodePtr sum_all(const NodePtr& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make_node("sum", Tensor::scalar(s), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        const double g = n.grad.data[0];
        for (double& d : pa.grad.data) d += g;
    });
}

NodePtr mean_all(const NodePtr& a) {
    const double inv = 1.0 / static_cast<double>(a->value.numel());
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make_node("mean", Tensor::scalar(s * inv), {a}, [inv](Node& n) {
        Node& pa = *n.parents[0];
        const double g = n.grad.data[0] * inv;
        for (double& d : pa.grad.data) d += g;
    });
}

NodePtr reshape(const NodePtr& a, std::vector<int> shape) {
    if (shape_numel(shape) != a->value.numel())
        throw validation_error("reshape: element count mismatch, " + a->value.shape_str());
    Tensor out(std::move(shape), a->value.data);
    return make_node("reshape", std::move(out), {a}, [](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i)
            pa.grad.data[i] += n.grad.data[i];
    });
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw validation_error("concat_cols: no inputs");
    int total = 0;
    for (const auto& p : parts) {
        check_rank2(p, "concat_cols");
        if (p->value.rows() != 1)
            throw validation_error("concat_cols: expected [1 x c] parts, got " +
                                   p->value.shape_str());
        total += p->value.cols();
    }
    Tensor out = Tensor::zeros({1, total});
    int off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data.begin(), p->value.data.end(), out.data.begin() + off);
        off += p->value.cols();
    }
    return make_node("concat_cols", std::move(out), parts, [](Node& n) {
        int off = 0;
        for (auto& p : n.parents) {
            const int c = p->value.cols();
            for (int j = 0; j < c; ++j) p->grad.data[j] += n.grad.data[off + j];
            off += c;
        }
    });
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw validation_error("concat_rows: no inputs");
    const int cols = parts[0]->value.cols();
    int total = 0;
    for (const auto& p : parts) {
        check_rank2(p, "concat_rows");
        if (p->value.cols() != cols)
            throw validation_error("concat_rows: column count mismatch");
        total += p->value.rows();
    }
    Tensor out = Tensor::zeros({total, cols});
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data.begin(), p->value.data.end(), out.data.begin() + off);
        off += p->value.data.size();
    }
    return make_node("concat_rows", std::move(out), parts, [](Node& n) {
        std::size_t off = 0;
        for (auto& p : n.parents) {
            for (std::size_t j = 0; j < p->grad.data.size(); ++j)
                p->grad.data[j] += n.grad.data[off + j];
            off += p->grad.data.size();
        }
    });
}

NodePtr scale(const NodePtr& a, double s) { return mul_scalar(a, s); }

NodePtr dot_const(const NodePtr& a, const Tensor& m) {
    return sum_all(mul(a, constant(m)));
}

NodePtr clamp(const NodePtr& a, double lo, double hi) {
    if (!(lo <= hi)) throw validation_error("clamp: lo must be <= hi");
    Tensor out = a->value;
    for (double& v : out.data) v = std::clamp(v, lo, hi);
    return make_node("clamp", std::move(out), {a}, [lo, hi](Node& n) {
        Node& pa = *n.parents[0];
        for (std::size_t i = 0; i < n.grad.data.size(); ++i)
            if (pa.value.data[i] > lo && pa.value.data[i] < hi)
                pa.grad.data[i] += n.grad.data[i];
    });
}

double scalar_value(const NodePtr& n) {
    if (n->value.numel() != 1)
        throw validation_error("scalar_value: node is not scalar, " + n->value.shape_str());
    return n->value.data[0];
}

std::vector<Node*> topo_order(const NodePtr& root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    // iterative post-order DFS; parents visited before the node is emitted
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

void backward(const NodePtr& root) {
    if (root->value.numel() != 1)
        throw validation_error("backward: root must be scalar, got " + root->value.shape_str());
    std::vector<Node*> order = topo_order(root);
    for (Node* n : order) n->grad = Tensor::zeros(n->value.shape);
    root->grad.data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->requires_grad) n->backprop(*n);
    }
}

double grad_check(const std::function<NodePtr(const NodePtr&)>& build,
                  const Tensor& x, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2))
        throw validation_error("grad_check: eps must be in (0, 1e-2]");
    NodePtr input = leaf(x);
    NodePtr out = build(input);
    backward(out);
    const Tensor analytic = input->grad;

    double max_rel = 0.0;
    Tensor probe = x;
    for (std::size_t i = 0; i < probe.data.size(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + eps;
        const double fp = scalar_value(build(constant(probe)));
        probe.data[i] = orig - eps;
        const double fm = scalar_value(build(constant(probe)));
        probe.data[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic.data[i];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
        max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
    return max_rel;
}

}  // namespace uat
