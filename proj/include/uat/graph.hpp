// graph.hpp - reverse-mode autodiff over dense tensors
//
// Define-by-run tape: each op computes its value eagerly and records a
// closure that scatters the incoming gradient to its parents. backward()
// walks the graph once in reverse topological order, so gradients are exact
// and deterministic for a fixed graph.
//
// Broadcasting is limited to scalar-tensor ops; everything else requires
// explicit reshape. Gradient of relu/max(.,0) at exactly 0 is 0.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "uat/tensor.hpp"

namespace uat {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    const char* op = "leaf";
    Tensor value;
    Tensor grad;  // empty until backward() reaches this node
    std::vector<NodePtr> parents;
    bool requires_grad = false;
    // accumulates this node's grad into its parents' grads
    std::function<void(Node&)> backprop;
};

// leaves
NodePtr leaf(Tensor value);      // trainable: participates in gradients
NodePtr constant(Tensor value);  // fixed input: grad still allocated, never asked for

// elementwise, same shape
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);

// scalar broadcast
NodePtr add_scalar(const NodePtr& a, double s);
NodePtr mul_scalar(const NodePtr& a, double s);
NodePtr sub_from_scalar(double s, const NodePtr& a);

// linear algebra
NodePtr matmul(const NodePtr& a, const NodePtr& b);
// sum of rows of table selected by indices: value = sum_i table[indices[i], :],
// shape [1 x cols]. Equivalent to matmul(one_hot_bag, table) but skips the zeros;
// used for one-hot pixel frames entering the encoder.
NodePtr embed_sum(const NodePtr& table, std::vector<int> indices);

// nonlinearities
NodePtr relu(const NodePtr& a);  // max(x, 0); gradient at 0 is 0
NodePtr sigmoid(const NodePtr& a);
NodePtr exp_(const NodePtr& a);
NodePtr log_(const NodePtr& a);  // domain x > 0
NodePtr softmax_rows(const NodePtr& a);      // [n x c], row-max stabilized
NodePtr log_softmax_rows(const NodePtr& a);  // [n x c], logsumexp stabilized

// reductions / shape
NodePtr sum_all(const NodePtr& a);   // -> [1,1]
NodePtr mean_all(const NodePtr& a);  // -> [1,1]
NodePtr reshape(const NodePtr& a, std::vector<int> shape);
NodePtr concat_cols(const std::vector<NodePtr>& parts);  // [1 x c_i] -> [1 x sum c_i]
NodePtr concat_rows(const std::vector<NodePtr>& parts);  // [r_i x c] -> [sum r_i x c]

// convenience sugar built on the primitives above
NodePtr scale(const NodePtr& a, double s);            // alias of mul_scalar
NodePtr dot_const(const NodePtr& a, const Tensor& m); // sum_all(a .* m)
NodePtr clamp(const NodePtr& a, double lo, double hi);// composed from max(.,0)

double scalar_value(const NodePtr& n);

// reverse accumulation from a scalar root. Zeroes the grads of every
// reachable node first, so repeated calls on the same graph are bit-identical.
void backward(const NodePtr& root);

// nodes reachable from root in deterministic (DFS post-order) order, root last
std::vector<Node*> topo_order(const NodePtr& root);

// max over components of |analytic - central difference| /
// max(|analytic|, |central|, 1e-12), for f built by `build` from a leaf at x.
double grad_check(const std::function<NodePtr(const NodePtr&)>& build,
                  const Tensor& x, double eps);

}  // namespace uat
