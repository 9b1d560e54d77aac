#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "uat/errors.hpp"
#include "uat/graph.hpp"
#include "uat/rng.hpp"

using namespace uat;

TEST_CASE("matmul matches hand-computed fixtures") {
    auto a = constant(Tensor({2, 2}, {1, 2, 3, 4}));
    auto b = constant(Tensor({2, 2}, {5, 6, 7, 8}));
    auto c = matmul(a, b);
    CHECK(c->value.data == std::vector<double>{19, 22, 43, 50});

    auto eye = constant(Tensor({2, 2}, {1, 0, 0, 1}));
    CHECK(matmul(a, eye)->value.data == a->value.data);
    CHECK(matmul(eye, a)->value.data == a->value.data);

    auto rect = matmul(constant(Tensor({1, 3}, {1, 2, 3})),
                       constant(Tensor({3, 2}, {1, 0, 0, 1, 1, 1})));
    CHECK(rect->value.shape == std::vector<int>{1, 2});
    CHECK(rect->value.data == std::vector<double>{4, 5});
}

TEST_CASE("matmul rejects mismatched inner dimensions naming both shapes") {
    auto a = constant(Tensor::zeros({2, 3}));
    auto b = constant(Tensor::zeros({2, 2}));
    CHECK_THROWS_WITH_AS(matmul(a, b),
                         "matmul: inner dimensions disagree, [2x3] x [2x2]",
                         validation_error);
}

TEST_CASE("matmul propagates NaN instead of skipping zero entries") {
    const double nan = std::nan("");
    auto a = constant(Tensor({1, 2}, {0.0, nan}));
    auto b = constant(Tensor({2, 1}, {1.0, 0.0}));
    CHECK(std::isnan(matmul(a, b)->value.data[0]));
}

TEST_CASE("softmax rows") {
    SUBCASE("two equal logits split evenly") {
        auto s = softmax_rows(constant(Tensor({1, 2}, {0, 0})));
        CHECK(s->value.data[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(s->value.data[1] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("log-ratio fixture") {
        auto s = softmax_rows(constant(Tensor({1, 2}, {std::log(2.0), 0})));
        CHECK(s->value.data[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
        CHECK(s->value.data[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("extreme logits stay finite") {
        auto s = softmax_rows(constant(Tensor({1, 2}, {1000, 0})));
        CHECK(s->value.all_finite());
        CHECK(s->value.data[0] == doctest::Approx(1.0));
    }
    SUBCASE("rows sum to one and entries stay in [0, 1]") {
        Rng rng(7);
        Tensor x = Tensor::zeros({5, 7});
        for (double& v : x.data) v = rng.uniform(-30, 30);
        auto s = softmax_rows(constant(x));
        for (int r = 0; r < 5; ++r) {
            double sum = 0;
            for (int c = 0; c < 7; ++c) {
                const double p = s->value.at(r, c);
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                sum += p;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("log_softmax agrees with log of softmax") {
        Tensor x({2, 3}, {0.3, -1.2, 4.0, 2.0, 2.0, -0.5});
        auto ls = log_softmax_rows(constant(x));
        auto s = softmax_rows(constant(x));
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(ls->value.data[i] ==
                  doctest::Approx(std::log(s->value.data[i])).epsilon(1e-12));
    }
}

TEST_CASE("elementwise ops demand matching shapes") {
    auto a = constant(Tensor::zeros({2, 2}));
    auto b = constant(Tensor::zeros({2, 3}));
    CHECK_THROWS_AS(add(a, b), validation_error);
    CHECK_THROWS_AS(sub(a, b), validation_error);
    CHECK_THROWS_AS(mul(a, b), validation_error);
}

TEST_CASE("backward computes d(x^2)/dx = 2x") {
    auto x = leaf(Tensor::scalar(3.0));
    auto y = mul(x, x);
    backward(y);
    CHECK(x->grad.data[0] == 6.0);
}

TEST_CASE("sigmoid gradient at zero is exactly one quarter") {
    auto x = leaf(Tensor::scalar(0.0));
    auto y = sigmoid(x);
    CHECK(y->value.data[0] == 0.5);
    backward(y);
    CHECK(x->grad.data[0] == 0.25);
}

TEST_CASE("relu gradient at exactly zero is zero") {
    auto x = leaf(Tensor({1, 3}, {-1.0, 0.0, 2.0}));
    auto y = sum_all(relu(x));
    CHECK(y->value.data[0] == 2.0);
    backward(y);
    CHECK(x->grad.data == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("repeated backward on the same graph is bit-identical") {
    Rng rng(11);
    Tensor xv = Tensor::zeros({3, 4});
    for (double& v : xv.data) v = rng.uniform(-2, 2);
    auto x = leaf(xv);
    auto y = mean_all(mul(sigmoid(x), x));
    backward(y);
    const std::vector<double> first = x->grad.data;
    backward(y);
    CHECK(x->grad.data == first);
}

TEST_CASE("backward rejects non-scalar roots") {
    auto x = leaf(Tensor::zeros({2, 2}));
    CHECK_THROWS_AS(backward(add_scalar(x, 1.0)), validation_error);
}

TEST_CASE("gradients accumulate across fan-out") {
    auto x = leaf(Tensor::scalar(2.0));
    auto y = add(mul(x, x), x);  // x^2 + x, derivative 2x + 1 = 5
    backward(y);
    CHECK(x->grad.data[0] == 5.0);
}

TEST_CASE("embed_sum gathers and sums rows like a one-hot matmul") {
    auto table = leaf(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
    auto picked = embed_sum(table, {2, 0, 2});
    CHECK(picked->value.shape == std::vector<int>{1, 2});
    CHECK(picked->value.data == std::vector<double>{11, 14});

    backward(sum_all(picked));
    CHECK(table->grad.data == std::vector<double>{1, 1, 0, 0, 2, 2});

    CHECK_THROWS_AS(embed_sum(table, {3}), validation_error);
}

TEST_CASE("reshape and concat preserve values and route gradients") {
    auto x = leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    auto r = reshape(x, {3, 2});
    CHECK(r->value.shape == std::vector<int>{3, 2});
    CHECK(r->value.data == x->value.data);
    CHECK_THROWS_AS(reshape(x, {4, 2}), validation_error);

    auto a = leaf(Tensor({1, 2}, {1, 2}));
    auto b = leaf(Tensor({1, 3}, {3, 4, 5}));
    auto cc = concat_cols({a, b});
    CHECK(cc->value.shape == std::vector<int>{1, 5});
    CHECK(cc->value.data == std::vector<double>{1, 2, 3, 4, 5});
    backward(sum_all(cc));
    CHECK(a->grad.data == std::vector<double>{1, 1});
    CHECK(b->grad.data == std::vector<double>{1, 1, 1});

    auto top = constant(Tensor({1, 2}, {9, 9}));
    auto cr = concat_rows({top, a});
    CHECK(cr->value.shape == std::vector<int>{2, 2});
    CHECK(cr->value.data == std::vector<double>{9, 9, 1, 2});
}

TEST_CASE("scalar broadcast ops") {
    auto x = leaf(Tensor({1, 2}, {1.0, -2.0}));
    CHECK(add_scalar(x, 3.0)->value.data == std::vector<double>{4.0, 1.0});
    CHECK(mul_scalar(x, -2.0)->value.data == std::vector<double>{-2.0, 4.0});
    CHECK(sub_from_scalar(1.0, x)->value.data == std::vector<double>{0.0, 3.0});
    CHECK(scale(x, 0.5)->value.data == std::vector<double>{0.5, -1.0});

    auto y = sum_all(sub_from_scalar(1.0, x));
    backward(y);
    CHECK(x->grad.data == std::vector<double>{-1.0, -1.0});
}

TEST_CASE("dot_const is the masked sum it claims to be") {
    auto x = leaf(Tensor({1, 3}, {2, 3, 4}));
    auto d = dot_const(x, Tensor({1, 3}, {1, 0, 2}));
    CHECK(scalar_value(d) == 10.0);
    backward(d);
    CHECK(x->grad.data == std::vector<double>{1, 0, 2});
}

TEST_CASE("clamp pins values to the interval and kills gradient outside") {
    auto x = leaf(Tensor({1, 4}, {-1.0, 0.25, 0.5, 2.0}));
    auto c = clamp(x, 0.0, 1.0);
    CHECK(c->value.data == std::vector<double>{0.0, 0.25, 0.5, 1.0});
    backward(sum_all(c));
    CHECK(x->grad.data == std::vector<double>{0.0, 1.0, 1.0, 0.0});
}

TEST_CASE("exp and log round-trip with exact derivative structure") {
    auto x = leaf(Tensor::scalar(0.7));
    auto y = log_(exp_(x));
    CHECK(scalar_value(y) == doctest::Approx(0.7).epsilon(1e-15));
    backward(y);
    CHECK(x->grad.data[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("constants do not receive gradient flow") {
    auto x = leaf(Tensor::scalar(2.0));
    auto k = constant(Tensor::scalar(5.0));
    auto y = mul(x, k);
    backward(y);
    CHECK(x->grad.data[0] == 5.0);
    CHECK_FALSE(k->requires_grad);
}

TEST_CASE("topo_order lists the root last, deterministically") {
    auto x = leaf(Tensor::scalar(1.0));
    auto y = mul(add_scalar(x, 1.0), x);
    auto order1 = topo_order(y);
    auto order2 = topo_order(y);
    CHECK(order1.back() == y.get());
    CHECK(order1 == order2);
}

TEST_CASE("grad_check on a linear map is near machine precision") {
    Rng rng(3);
    Tensor x = Tensor::zeros({2, 3});
    for (double& v : x.data) v = rng.uniform(-1, 1);
    const double err = grad_check([](const NodePtr& n) { return sum_all(n); }, x, 1e-5);
    CHECK(err < 1e-10);
}

TEST_CASE("grad_check validates its step size") {
    Tensor x = Tensor::scalar(1.0);
    auto build = [](const NodePtr& n) { return sum_all(n); };
    CHECK_THROWS_AS(grad_check(build, x, 0.0), validation_error);
    CHECK_THROWS_AS(grad_check(build, x, 2e-2), validation_error);
    CHECK_THROWS_AS(grad_check(build, x, -1e-5), validation_error);
}
