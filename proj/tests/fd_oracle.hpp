#ifndef HGCN_TESTS_FD_ORACLE_HPP
#define HGCN_TESTS_FD_ORACLE_HPP

// Central finite differences, used as the independent reference for every
// analytic gradient in the tests.

#include "hgcn/autodiff.hpp"
#include "hgcn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace hgcn::testing {

using LossBuilder = std::function<NodePtr(Tape&)>;

inline constexpr double kFdStep = 1e-6;

// Below this magnitude the comparison becomes absolute; double rounding in the
// difference quotient is ~1e-10 for O(1) losses.
inline constexpr double kRelFloor = 1e-4;

inline double rel_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
    return std::abs(analytic - numeric) / denom;
}

inline double eval_loss(const LossBuilder& build) {
    Tape tape;
    return build(tape)->value(0, 0);
}

inline Matrix numeric_gradient(const NodePtr& p, const LossBuilder& build,
                               double h = kFdStep) {
    Matrix g(p->value.rows(), p->value.cols());
    for (std::size_t i = 0; i < p->value.rows(); ++i) {
        for (std::size_t j = 0; j < p->value.cols(); ++j) {
            const double keep = p->value(i, j);
            p->value(i, j) = keep + h;
            const double up = eval_loss(build);
            p->value(i, j) = keep - h;
            const double down = eval_loss(build);
            p->value(i, j) = keep;
            g(i, j) = (up - down) / (2.0 * h);
        }
    }
    return g;
}

inline std::vector<Matrix> analytic_gradients(const std::vector<NodePtr>& params,
                                              const LossBuilder& build) {
    for (const auto& p : params) {
        p->zero_grad();
    }
    Tape tape;
    tape.backward(build(tape));
    std::vector<Matrix> out;
    for (const auto& p : params) {
        out.push_back(p->grad);
        p->zero_grad();
    }
    return out;
}

// Largest relative error over every entry of every parameter.
inline double max_gradient_error(const std::vector<NodePtr>& params, const LossBuilder& build) {
    const auto analytic = analytic_gradients(params, build);
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Matrix numeric = numeric_gradient(params[k], build);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            worst = std::max(worst, rel_error(analytic[k].data()[i], numeric.data()[i]));
        }
    }
    return worst;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

// Contracts a node of any shape to a scalar with fixed random weights, so
// every output entry receives a distinct upstream gradient.
inline NodePtr project(Tape& tape, const NodePtr& x, const Matrix& weights) {
    return sum(tape, elementwise_mul(tape, x, tape.constant(weights)));
}

} // namespace hgcn::testing

#endif // HGCN_TESTS_FD_ORACLE_HPP
