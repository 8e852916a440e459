#ifndef HGCN_OPTIM_HPP
#define HGCN_OPTIM_HPP

#include "hgcn/autodiff.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>

namespace hgcn {

/// p <- p - lr * grad for every parameter, then grads are zeroed.
/// lr = 0 is a no-op step; negative or non-finite lr is rejected.
void sgd_step(std::span<const NodePtr> params, double lr);

void zero_grads(std::span<const NodePtr> params) noexcept;

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. Moment buffers are keyed
/// by parameter identity, so a single instance must see the same parameter
/// set on every step.
class Adam {
public:
    explicit Adam(AdamOptions options = {});

    /// Applies one update to every parameter in `params`, then zeroes grads.
    void step(std::span<const NodePtr> params);

    std::int64_t steps() const noexcept { return t_; }
    const AdamOptions& options() const noexcept { return opts_; }

private:
    struct Moments {
        Matrix m;
        Matrix v;
    };
    AdamOptions opts_;
    std::int64_t t_ = 0;
    std::unordered_map<const Node*, Moments> state_;
};

} // namespace hgcn

#endif // HGCN_OPTIM_HPP
