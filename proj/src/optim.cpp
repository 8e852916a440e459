#include "hgcn/optim.hpp"

#include "hgcn/error.hpp"

#include <cmath>
#include <string>

namespace hgcn {

namespace {

void check_lr(double lr) {
    if (!std::isfinite(lr) || lr < 0.0) {
        throw ValidationError("learning rate must be finite and non-negative, got " +
                              std::to_string(lr));
    }
}

} // namespace

void zero_grads(std::span<const NodePtr> params) noexcept {
    for (const auto& p : params) {
        p->zero_grad();
    }
}

void sgd_step(std::span<const NodePtr> params, double lr) {
    check_lr(lr);
    for (const auto& p : params) {
        if (lr != 0.0) {
            auto v = p->value.data();
            auto g = p->grad.data();
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] -= lr * g[i];
            }
        }
        p->zero_grad();
    }
}

Adam::Adam(AdamOptions options) : opts_(options) {
    check_lr(opts_.lr);
    if (!(opts_.beta1 >= 0.0 && opts_.beta1 < 1.0 && opts_.beta2 >= 0.0 && opts_.beta2 < 1.0)) {
        throw ValidationError("adam betas must lie in [0, 1)");
    }
    if (!(opts_.epsilon > 0.0)) {
        throw ValidationError("adam epsilon must be positive");
    }
}

void Adam::step(std::span<const NodePtr> params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (const auto& p : params) {
        auto [it, inserted] = state_.try_emplace(p.get());
        if (inserted) {
            it->second.m = Matrix(p->value.rows(), p->value.cols());
            it->second.v = Matrix(p->value.rows(), p->value.cols());
        }
        auto m = it->second.m.data();
        auto v = it->second.v.data();
        auto w = p->value.data();
        auto g = p->grad.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
            v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= opts_.lr * m_hat / (std::sqrt(v_hat) + opts_.epsilon);
        }
        p->zero_grad();
    }
}

} // namespace hgcn
