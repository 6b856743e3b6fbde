// Finite-difference verification of every backward rule, plus a property
// test over random compositions of the ops.

#include <gtest/gtest.h>

#include "hypermp/tensor.hpp"
#include "support/test_support.hpp"

using namespace hypermp;
using hypermp::testing::central_differences;
using hypermp::testing::random_tensor;
using hypermp::testing::rel_err;

namespace {

constexpr double kOpTol = 1e-6;     // single ops
constexpr double kChainTol = 1e-4;  // compositions

// max relative error between the analytic gradient of `param` and central
// finite differences of `forward` (which must rebuild the loss from scratch)
template <typename Forward>
double check_param(const Tensor& param, Forward forward, double step = 1e-5) {
    Tape tape;
    Tensor loss = forward(&tape);
    param.zero_grad();  // grads accumulate across backward calls by design
    tape.backward(loss);
    std::vector<double> analytic = param.grad();
    const auto numeric = central_differences(
        param, [&] { return forward(static_cast<Tape*>(nullptr))[0]; }, step);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i)
        worst = std::max(worst, rel_err(analytic[i], numeric[i]));
    return worst;
}

}  // namespace

TEST(GradCheck, MatmulBothSides) {
    Rng rng(101);
    auto a = random_tensor(rng, 3, 4);
    auto b = random_tensor(rng, 4, 2);
    auto forward = [&](Tape* t) { return sum(t, matmul(t, a, b)); };
    EXPECT_LT(check_param(a, forward), kOpTol);
    EXPECT_LT(check_param(b, forward), kOpTol);
}

TEST(GradCheck, MatmulTransposeFlags) {
    Rng rng(102);
    auto a = random_tensor(rng, 4, 3);  // used transposed
    auto b = random_tensor(rng, 2, 4);  // used transposed
    auto weights = random_tensor(rng, 3, 2);
    auto forward = [&](Tape* t) {
        Tensor y = matmul(t, a, b, true, true);      // [3 x 2]
        return sum(t, hadamard_const(t, y, weights.values()));
    };
    EXPECT_LT(check_param(a, forward), kOpTol);
    EXPECT_LT(check_param(b, forward), kOpTol);
}

TEST(GradCheck, SpmmBothDirections) {
    Rng rng(103);
    auto h = hypermp::testing::random_hypergraph(rng, 5, 4);
    SparseIncidence inc(h);
    auto x = random_tensor(rng, 4, 3);
    auto forward = [&](Tape* t) {
        return sum(t, elementwise(t, UnaryOp::sigmoid, spmm(t, inc, false, x)));
    };
    EXPECT_LT(check_param(x, forward), kOpTol);
    auto xt = random_tensor(rng, 5, 3);
    auto forward_t = [&](Tape* t) {
        return sum(t, elementwise(t, UnaryOp::sigmoid, spmm(t, inc, true, xt)));
    };
    EXPECT_LT(check_param(xt, forward_t), kOpTol);
}

TEST(GradCheck, SpmmCsr) {
    Rng rng(104);
    auto dense = random_tensor(rng, 4, 5);
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (rng.bernoulli(0.5)) dense[i] = 0.0;
    const auto csr = CsrMatrix::from_dense(dense);
    auto x = random_tensor(rng, 5, 2);
    auto forward = [&](Tape* t) {
        return sum(t, elementwise(t, UnaryOp::sigmoid, spmm_csr(t, csr, false, x)));
    };
    EXPECT_LT(check_param(x, forward), kOpTol);
}

TEST(GradCheck, RowSoftmaxWeightedLoss) {
    Rng rng(105);
    auto x = random_tensor(rng, 3, 4);
    auto weights = random_tensor(rng, 3, 4);
    auto forward = [&](Tape* t) {
        return sum(t, hadamard_const(t, row_softmax(t, x), weights.values()));
    };
    EXPECT_LT(check_param(x, forward), kOpTol);
}

TEST(GradCheck, AddRowBias) {
    Rng rng(106);
    auto x = random_tensor(rng, 3, 4);
    auto bias = Tensor::vec({0.1, -0.2, 0.3, 0.4});
    auto forward = [&](Tape* t) {
        return sum(t, elementwise(t, UnaryOp::sigmoid, add_row_bias(t, x, bias)));
    };
    EXPECT_LT(check_param(x, forward), kOpTol);
    EXPECT_LT(check_param(bias, forward), kOpTol);
}

TEST(GradCheck, RowScaleAndScale) {
    Rng rng(107);
    auto x = random_tensor(rng, 4, 3);
    const std::vector<double> factors = {2.0, 0.0, -1.5, 0.5};
    auto forward = [&](Tape* t) {
        return sum(t, elementwise(t, UnaryOp::sigmoid, scale(t, row_scale(t, x, factors), 1.7)));
    };
    EXPECT_LT(check_param(x, forward), kOpTol);
}

TEST(GradCheck, ConcatSliceGatherStack) {
    Rng rng(108);
    auto a = random_tensor(rng, 3, 2);
    auto b = random_tensor(rng, 3, 3);
    auto forward = [&](Tape* t) {
        Tensor joined = concat_cols(t, a, b);                 // [3 x 5]
        Tensor part = slice_cols(t, joined, 1, 4);            // [3 x 3]
        Tensor picked = gather_rows(t, part, {2, 0, 2});      // [3 x 3]
        Tensor restacked = stack_rows(
            t, {gather_rows(t, picked, {0}), gather_rows(t, picked, {1}), gather_rows(t, picked, {2})});
        return sum(t, elementwise(t, UnaryOp::sigmoid, restacked));
    };
    EXPECT_LT(check_param(a, forward), kOpTol);
    EXPECT_LT(check_param(b, forward), kOpTol);
}

TEST(GradCheck, LayerNorm) {
    Rng rng(109);
    auto x = random_tensor(rng, 3, 5);
    auto gain = Tensor::vec({1.1, 0.9, 1.2, 0.8, 1.0});
    auto shift = Tensor::vec({0.1, -0.1, 0.0, 0.2, -0.2});
    auto weights = random_tensor(rng, 3, 5);
    auto forward = [&](Tape* t) {
        return sum(t, hadamard_const(t, layer_norm(t, x, gain, shift), weights.values()));
    };
    EXPECT_LT(check_param(x, forward), kOpTol);
    EXPECT_LT(check_param(gain, forward), kOpTol);
    EXPECT_LT(check_param(shift, forward), kOpTol);
}

// property: compositions of the provided smooth ops stay within 1e-4
TEST(GradCheck, RandomCompositions) {
    Rng rng(110);
    for (int trial = 0; trial < 12; ++trial) {
        const int rows = 2 + static_cast<int>(rng.below(3));
        int width = 2 + static_cast<int>(rng.below(4));
        auto x = random_tensor(rng, rows, width);
        std::vector<Tensor> params{x};
        struct Step {
            int kind;
            Tensor p1, p2;
        };
        std::vector<Step> steps;
        const int depth = 2 + static_cast<int>(rng.below(3));
        for (int d = 0; d < depth; ++d) {
            Step s;
            s.kind = static_cast<int>(rng.below(5));
            if (s.kind == 2) {
                const int next = 2 + static_cast<int>(rng.below(4));
                s.p1 = random_tensor(rng, width, next);
                params.push_back(s.p1);
                width = next;
            } else if (s.kind == 3) {
                s.p1 = random_tensor(rng, 1, width);
                s.p1 = Tensor::vec(s.p1.values());
                params.push_back(s.p1);
            } else if (s.kind == 4) {
                s.p1 = Tensor::vec(std::vector<double>(width, 1.0));
                s.p2 = Tensor::vec(std::vector<double>(width, 0.0));
                params.push_back(s.p1);
                params.push_back(s.p2);
            }
            steps.push_back(s);
        }
        auto head = random_tensor(rng, width, 2);
        params.push_back(head);
        auto forward = [&](Tape* t) {
            Tensor cur = x;
            for (const auto& s : steps) {
                switch (s.kind) {
                    case 0: cur = elementwise(t, UnaryOp::sigmoid, cur); break;
                    case 1: cur = row_softmax(t, cur); break;
                    case 2: cur = matmul(t, cur, s.p1); break;
                    case 3: cur = add_row_bias(t, cur, s.p1); break;
                    case 4: cur = layer_norm(t, cur, s.p1, s.p2); break;
                }
            }
            return sum(t, elementwise(t, UnaryOp::sigmoid, matmul(t, cur, head)));
        };
        for (const auto& p : params) EXPECT_LT(check_param(p, forward), kChainTol) << "trial " << trial;
    }
}
