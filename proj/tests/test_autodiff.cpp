#include "fd_oracle.hpp"

#include "hgcn/autodiff.hpp"
#include "hgcn/error.hpp"
#include "hgcn/matrix.hpp"
#include "hgcn/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace hgcn;
using namespace hgcn::testing;

namespace {

constexpr int kTrials = 20;
constexpr double kOpTol = 1e-4;

void expect_matrix_near(const Matrix& a, const Matrix& b, double tol) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a.data()[i], b.data()[i], tol) << "entry " << i;
    }
}

std::size_t dim(Rng& rng) { return 1 + rng.below(4); }

} // namespace

TEST(Matrix, ShapeAndAccess) {
    Matrix m{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m.size(), 6u);
    EXPECT_EQ(m(1, 2), 6.0);
    EXPECT_EQ(m.shape_string(), "2x3");
    EXPECT_THROW(m.at(2, 0), DimensionError);
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
    EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionError);
    EXPECT_EQ(m.transpose(), (Matrix{{1, 4}, {2, 5}, {3, 6}}));
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    Rng rng(1);
    for (int t = 0; t < kTrials; ++t) {
        const Matrix m = random_matrix(rng, 2, 2);
        EXPECT_EQ(matmul(Matrix::identity(2), m), m);
    }
}

TEST(Matmul, HandExample) {
    Tape tape;
    auto a = tape.constant({{1, 2}, {3, 4}});
    auto b = tape.constant({{1}, {1}});
    EXPECT_EQ(matmul(tape, a, b)->value, (Matrix{{3}, {7}}));
}

TEST(Matmul, GradientOfSumMatchesOracleAndFrozenValue) {
    auto a = make_parameter({{1, 0}, {0, 1}});
    const Matrix b{{2, 3}, {4, 5}};
    LossBuilder build = [&](Tape& t) { return sum(t, matmul(t, a, t.constant(b))); };
    const Matrix numeric = numeric_gradient(a, build);
    const Matrix analytic = analytic_gradients({a}, build)[0];
    const Matrix frozen{{5, 9}, {5, 9}};
    expect_matrix_near(numeric, frozen, 1e-6);
    expect_matrix_near(analytic, frozen, 1e-12);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    Tape tape;
    auto a = tape.constant(Matrix(2, 3));
    auto b = tape.constant(Matrix(2, 3));
    try {
        matmul(tape, a, b);
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos);
        EXPECT_NE(msg.find("by 2x3"), std::string::npos);
    }
}

TEST(Elementwise, Identities) {
    Rng rng(2);
    const Matrix m = random_matrix(rng, 3, 2);
    Tape tape;
    auto x = make_parameter(m);
    EXPECT_EQ(add(tape, x, tape.constant(Matrix::zeros(3, 2)))->value, m);
    EXPECT_EQ(elementwise_mul(tape, x, tape.constant(Matrix::ones(3, 2)))->value, m);
    auto z = scale(tape, x, 0.0);
    EXPECT_EQ(z->value, Matrix::zeros(3, 2));
    tape.backward(sum(tape, z));
    EXPECT_EQ(x->grad, Matrix::zeros(3, 2));
}

TEST(Elementwise, ShapeMismatchThrows) {
    Tape tape;
    auto a = tape.constant(Matrix(2, 2));
    auto b = tape.constant(Matrix(2, 3));
    EXPECT_THROW(add(tape, a, b), DimensionError);
    EXPECT_THROW(elementwise_mul(tape, a, b), DimensionError);
}

TEST(Activation, ReluCases) {
    Tape tape;
    EXPECT_EQ(activation(tape, tape.constant({{-1, 2}}))->value, (Matrix{{0, 2}}));
    EXPECT_EQ(activation(tape, tape.constant(Matrix::zeros(2, 3)))->value, Matrix::zeros(2, 3));
}

TEST(Activation, ReluSlopes) {
    auto pos = make_parameter({{3}});
    Tape t1;
    t1.backward(sum(t1, activation(t1, pos)));
    EXPECT_EQ(pos->grad, (Matrix{{1}}));

    auto zero = make_parameter({{0.0, -2.0}});
    Tape t2;
    t2.backward(sum(t2, activation(t2, zero)));
    EXPECT_EQ(zero->grad, (Matrix{{0.0, 0.0}}));
}

TEST(Activation, TanhValues) {
    Tape tape;
    auto y = activation(tape, tape.constant({{0.0, 0.5}}), Activation::Tanh);
    EXPECT_DOUBLE_EQ(y->value(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(y->value(0, 1), std::tanh(0.5));
}

TEST(Softmax, Examples) {
    Tape tape;
    auto u = softmax_row(tape, tape.constant({{0, 0, 0}}));
    for (double v : u->value.data()) {
        EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
    auto p = softmax_row(tape, tape.constant({{std::log(2.0), 0.0}}));
    EXPECT_NEAR(p->value(0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p->value(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, SumsToOneWithOpenUnitEntries) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        Tape tape;
        const std::size_t n = 1 + rng.below(20);
        auto p = softmax_row(tape, tape.constant(random_matrix(rng, 1, n, -30, 30)));
        EXPECT_NEAR(p->value.sum(), 1.0, 1e-9);
        for (double v : p->value.data()) {
            EXPECT_GT(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Softmax, LargeLogitsStayFinite) {
    Tape tape;
    auto p = softmax_row(tape, tape.constant({{1000.0, 999.0, -1000.0}}));
    EXPECT_TRUE(p->value.all_finite());
    EXPECT_NEAR(p->value.sum(), 1.0, 1e-12);
}

TEST(Softmax, RejectsNonRowAndEmpty) {
    Tape tape;
    EXPECT_THROW(softmax_row(tape, tape.constant(Matrix(2, 2))), DimensionError);
    EXPECT_THROW(softmax_row(tape, tape.constant(Matrix(1, 0))), DimensionError);
}

TEST(Softmax, GradientWithinTightTolerance) {
    Rng rng(4);
    for (int t = 0; t < kTrials; ++t) {
        const std::size_t n = 2 + rng.below(6);
        auto x = make_parameter(random_matrix(rng, 1, n));
        const Matrix w = random_matrix(rng, 1, n);
        EXPECT_LT(max_gradient_error({x}, [&](Tape& tp) { return project(tp, softmax_row(tp, x), w); }),
                  1e-5);
    }
}

TEST(Mse, Examples) {
    Tape tape;
    auto same = tape.constant({{0.3, 0.7}});
    EXPECT_EQ(mse_loss(tape, same, Matrix{{0.3, 0.7}})->value(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(mse_loss(tape, tape.constant({{1, 0}}), Matrix{{0, 0}})->value(0, 0), 0.5);
    EXPECT_THROW(mse_loss(tape, same, Matrix(1, 3)), DimensionError);
}

TEST(Mse, GradientWithinTightTolerance) {
    Rng rng(5);
    for (int t = 0; t < kTrials; ++t) {
        const std::size_t r = dim(rng);
        const std::size_t c = dim(rng);
        auto x = make_parameter(random_matrix(rng, r, c));
        const Matrix target = random_matrix(rng, r, c);
        EXPECT_LT(max_gradient_error({x}, [&](Tape& tp) { return mse_loss(tp, x, target); }), 1e-5);
    }
}

// Each op gets >= 20 random trials against the finite-difference oracle.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
    Rng rng(100 + static_cast<std::uint64_t>(GetParam()));
    const std::size_t r = dim(rng);
    const std::size_t k = dim(rng);
    const std::size_t c = dim(rng);
    auto a = make_parameter(random_matrix(rng, r, k));
    auto b = make_parameter(random_matrix(rng, k, c));
    auto a2 = make_parameter(random_matrix(rng, r, k));
    auto below = make_parameter(random_matrix(rng, c, k));
    auto side = make_parameter(random_matrix(rng, r, c));
    const double factor = rng.uniform(-2, 2);
    const Matrix w_rk = random_matrix(rng, r, k);
    const Matrix w_rc = random_matrix(rng, r, c);
    const Matrix w_kr = random_matrix(rng, k, r);
    const Matrix w_stack = random_matrix(rng, r + c, k);
    const Matrix w_side = random_matrix(rng, r, k + c);
    const std::size_t begin = rng.below(r);
    const std::size_t count = 1 + rng.below(r - begin);
    const Matrix w_slice = random_matrix(rng, count, k);
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < 5; ++i) {
        ids.push_back(rng.below(r)); // repeats are likely and intended
    }
    const Matrix w_gather = random_matrix(rng, ids.size(), k);

    EXPECT_LT(max_gradient_error({a, b}, [&](Tape& t) { return project(t, matmul(t, a, b), w_rc); }),
              kOpTol) << "matmul";
    EXPECT_LT(max_gradient_error({a, a2}, [&](Tape& t) { return project(t, add(t, a, a2), w_rk); }),
              kOpTol) << "add";
    EXPECT_LT(max_gradient_error(
                  {a, a2}, [&](Tape& t) { return project(t, elementwise_mul(t, a, a2), w_rk); }),
              kOpTol) << "elementwise_mul";
    EXPECT_LT(max_gradient_error({a}, [&](Tape& t) { return project(t, scale(t, a, factor), w_rk); }),
              kOpTol) << "scale";
    EXPECT_LT(max_gradient_error({a}, [&](Tape& t) { return project(t, activation(t, a), w_rk); }),
              kOpTol) << "relu";
    EXPECT_LT(max_gradient_error(
                  {a}, [&](Tape& t) { return project(t, activation(t, a, Activation::Tanh), w_rk); }),
              kOpTol) << "tanh";
    EXPECT_LT(max_gradient_error({a}, [&](Tape& t) { return sum(t, a); }), kOpTol) << "sum";
    EXPECT_LT(max_gradient_error({a}, [&](Tape& t) { return project(t, transpose(t, a), w_kr); }),
              kOpTol) << "transpose";
    EXPECT_LT(max_gradient_error(
                  {a, below}, [&](Tape& t) { return project(t, concat_rows(t, a, below), w_stack); }),
              kOpTol) << "concat_rows";
    EXPECT_LT(max_gradient_error(
                  {a, side}, [&](Tape& t) { return project(t, concat_cols(t, a, side), w_side); }),
              kOpTol) << "concat_cols";
    EXPECT_LT(max_gradient_error(
                  {a}, [&](Tape& t) { return project(t, slice_rows(t, a, begin, count), w_slice); }),
              kOpTol) << "slice_rows";
    EXPECT_LT(max_gradient_error(
                  {a}, [&](Tape& t) { return project(t, gather_rows(t, a, ids), w_gather); }),
              kOpTol) << "gather_rows";
    const Matrix target = random_matrix(rng, r, k);
    EXPECT_LT(max_gradient_error({a}, [&](Tape& t) { return mse_loss(t, a, target); }), kOpTol)
        << "mse_loss";
}

INSTANTIATE_TEST_SUITE_P(RandomTrials, OpGradient, ::testing::Range(0, kTrials));

TEST(Backward, SumGivesOnes) {
    auto w = make_parameter(Matrix(3, 2, 0.25));
    Tape tape;
    tape.backward(sum(tape, w));
    EXPECT_EQ(w->grad, Matrix::ones(3, 2));
}

TEST(Backward, FullChainMatchesFiniteDifferences) {
    Rng rng(6);
    for (int t = 0; t < kTrials; ++t) {
        const std::size_t d = 1 + rng.below(4);
        const std::size_t n = 2 + rng.below(4);
        const Matrix x = random_matrix(rng, 1, d);
        auto w = make_parameter(random_matrix(rng, d, n));
        Matrix target(1, n);
        target(0, rng.below(n)) = 1.0;
        LossBuilder build = [&](Tape& tp) {
            return mse_loss(tp, softmax_row(tp, matmul(tp, tp.constant(x), w)), target);
        };
        EXPECT_LT(max_gradient_error({w}, build), kOpTol);
    }
}

TEST(Backward, RepeatedCallsAccumulate) {
    Rng rng(7);
    auto w = make_parameter(random_matrix(rng, 2, 3));
    const Matrix x = random_matrix(rng, 1, 2);
    Tape tape;
    auto loss = mse_loss(tape, softmax_row(tape, matmul(tape, tape.constant(x), w)), Matrix(1, 3));
    tape.backward(loss);
    const Matrix once = w->grad;
    tape.backward(loss);
    expect_matrix_near(w->grad, once * 2.0, 1e-15);
}

TEST(Backward, RejectsNonScalarAndForeignLoss) {
    auto w = make_parameter(Matrix(2, 2, 1.0));
    Tape tape;
    auto y = scale(tape, w, 2.0);
    EXPECT_THROW(tape.backward(y), DimensionError);
    Tape other;
    auto loss = sum(other, w);
    EXPECT_THROW(tape.backward(loss), std::invalid_argument);
}

// A node with k consumers must receive the sum of the k path contributions,
// which is exactly what k independent copies of that node would receive.
TEST(Backward, SharedNodeEqualsDuplicatedNodes) {
    Rng rng(8);
    for (int k = 1; k <= 5; ++k) {
        const Matrix x = random_matrix(rng, 2, 3);
        auto w_shared = make_parameter(random_matrix(rng, 3, 2));
        auto w_dup = make_parameter(w_shared->value);
        std::vector<Matrix> weights;
        for (int c = 0; c < k; ++c) {
            weights.push_back(random_matrix(rng, 2, 2));
        }

        Tape shared;
        auto h = activation(shared, matmul(shared, shared.constant(x), w_shared), Activation::Tanh);
        NodePtr total = project(shared, h, weights[0]);
        for (int c = 1; c < k; ++c) {
            total = add(shared, total, project(shared, h, weights[static_cast<std::size_t>(c)]));
        }
        shared.backward(total);

        Matrix unrolled(3, 2);
        for (int c = 0; c < k; ++c) {
            Tape copy;
            auto hc = activation(copy, matmul(copy, copy.constant(x), w_dup), Activation::Tanh);
            copy.backward(project(copy, hc, weights[static_cast<std::size_t>(c)]));
            unrolled += w_dup->grad;
            w_dup->zero_grad();
        }
        expect_matrix_near(w_shared->grad, unrolled, 1e-12);
    }
}

TEST(Tape, TopologicalOrder) {
    Rng rng(9);
    auto w = make_parameter(random_matrix(rng, 3, 3));
    Tape tape;
    auto x = tape.constant(random_matrix(rng, 2, 3));
    auto h = matmul(tape, x, w);
    auto y = add(tape, h, activation(tape, h));
    sum(tape, concat_rows(tape, y, slice_rows(tape, y, 0, 1)));
    std::set<const Node*> seen;
    for (const auto& node : tape.nodes()) {
        for (const auto& parent : node->parents) {
            if (tape.contains(parent.get())) {
                EXPECT_TRUE(seen.count(parent.get())) << op_name(node->op);
            }
        }
        seen.insert(node.get());
        EXPECT_TRUE(node->value.same_shape(node->grad));
    }
    EXPECT_FALSE(tape.contains(w.get()));
}

TEST(Tape, RejectsNonFinite) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_THROW(make_parameter({{nan}}), NumericError);
    Tape tape;
    EXPECT_THROW(tape.constant({{1.0, inf}}), NumericError);
    auto big = tape.constant({{1e300}});
    EXPECT_THROW(scale(tape, big, 1e300), NumericError);
    EXPECT_THROW(scale(tape, big, nan), NumericError);
}

TEST(GatherRows, GradientOnlyReachesSelectedRows) {
    auto table = make_parameter(Matrix(6, 2, 0.5));
    const std::vector<std::size_t> ids{1, 4, 1};
    Tape tape;
    tape.backward(sum(tape, gather_rows(tape, table, ids)));
    for (std::size_t r = 0; r < 6; ++r) {
        const double expected = r == 1 ? 2.0 : (r == 4 ? 1.0 : 0.0);
        EXPECT_EQ(table->grad(r, 0), expected);
        EXPECT_EQ(table->grad(r, 1), expected);
    }
    EXPECT_THROW(gather_rows(tape, table, std::vector<std::size_t>{6}), DimensionError);
}

TEST(Sgd, ZeroLearningRateIsNoOp) {
    auto p = make_parameter({{1.0, -3.0}});
    p->grad = Matrix{{2.0, 5.0}};
    sgd_step(std::vector<NodePtr>{p}, 0.0);
    EXPECT_EQ(p->value, (Matrix{{1.0, -3.0}}));
    EXPECT_EQ(p->grad, Matrix::zeros(1, 2));
}

TEST(Sgd, HandExample) {
    auto p = make_parameter({{1.0}});
    p->grad = Matrix{{2.0}};
    sgd_step(std::vector<NodePtr>{p}, 0.1);
    EXPECT_DOUBLE_EQ(p->value(0, 0), 0.8);
    EXPECT_EQ(p->grad(0, 0), 0.0);
}

TEST(Sgd, RejectsNegativeOrNonFiniteRate) {
    auto p = make_parameter({{1.0}});
    EXPECT_THROW(sgd_step(std::vector<NodePtr>{p}, -0.1), ValidationError);
    EXPECT_THROW(sgd_step(std::vector<NodePtr>{p}, std::numeric_limits<double>::infinity()),
                 ValidationError);
}

// With bias correction the first step is lr * g / (|g| + eps) per entry.
TEST(Adam, FirstStepHandValue) {
    auto p = make_parameter({{1.0, 1.0}});
    p->grad = Matrix{{0.5, -4.0}};
    Adam adam(AdamOptions{0.1, 0.9, 0.999, 1e-8});
    adam.step(std::vector<NodePtr>{p});
    EXPECT_NEAR(p->value(0, 0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
    EXPECT_NEAR(p->value(0, 1), 1.0 + 0.1 * 4.0 / (4.0 + 1e-8), 1e-12);
    EXPECT_EQ(adam.steps(), 1);
    EXPECT_EQ(p->grad, Matrix::zeros(1, 2));
}

TEST(Adam, RejectsBadOptions) {
    EXPECT_THROW(Adam(AdamOptions{-1.0, 0.9, 0.999, 1e-8}), ValidationError);
    EXPECT_THROW(Adam(AdamOptions{0.1, 1.0, 0.999, 1e-8}), ValidationError);
    EXPECT_THROW(Adam(AdamOptions{0.1, 0.9, 0.999, 0.0}), ValidationError);
}

TEST(Optimizers, DeterministicAcrossRuns) {
    auto run = [](bool use_adam) {
        Rng rng(10);
        auto w = make_parameter(random_matrix(rng, 3, 4));
        const Matrix x = random_matrix(rng, 1, 3);
        Matrix target(1, 4);
        target(0, 2) = 1.0;
        Adam adam(AdamOptions{0.05});
        for (int step = 0; step < 25; ++step) {
            Tape tape;
            tape.backward(
                mse_loss(tape, softmax_row(tape, matmul(tape, tape.constant(x), w)), target));
            if (use_adam) {
                adam.step(std::vector<NodePtr>{w});
            } else {
                sgd_step(std::vector<NodePtr>{w}, 0.5);
            }
        }
        return w->value;
    };
    EXPECT_EQ(run(false), run(false));
    EXPECT_EQ(run(true), run(true));
}
