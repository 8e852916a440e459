#ifndef HGCN_AUTODIFF_HPP
#define HGCN_AUTODIFF_HPP

#include "hgcn/matrix.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace hgcn {

enum class OpKind : std::uint8_t {
    Parameter,
    Constant,
    MatMul,
    Add,
    ElementwiseMul,
    Scale,
    Relu,
    Tanh,
    SoftmaxRow,
    MseLoss,
    Sum,
    Transpose,
    ConcatRows,
    ConcatCols,
    SliceRows,
    GatherRows,
    AssembleBlock,
    NormalizeAdjacency,
    CosineEdges,
};

std::string_view op_name(OpKind op) noexcept;

enum class Activation : std::uint8_t { Relu, Tanh };

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the computation graph.
///
/// `grad` always has the shape of `value`. Parameters and constants are
/// leaves; every other node carries a backward closure that pushes its own
/// grad into the grads of `parents`.
struct Node {
    Matrix value;
    Matrix grad;
    OpKind op = OpKind::Constant;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward;

    bool is_leaf() const noexcept { return op == OpKind::Parameter || op == OpKind::Constant; }
    void zero_grad() noexcept { grad.fill(0.0); }
};

/// Trainable leaf that lives across tapes.
NodePtr make_parameter(Matrix value);

/// Records nodes in creation order; backward sweeps them in reverse.
///
/// A tape is single-use per forward pass. Parameters are not owned by the
/// tape; their gradients accumulate until explicitly zeroed.
class Tape {
public:
    NodePtr constant(Matrix value);

    /// Appends an op result. Throws NumericError if `value` is not finite.
    NodePtr record(Matrix value, OpKind op, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward);

    /// Reverse-mode sweep from a 1x1 `loss` that was recorded on this tape.
    /// Intermediate grads are reset first, so repeated calls add exactly one
    /// more copy of every gradient into the parameters.
    void backward(const NodePtr& loss);

    bool contains(const Node* node) const noexcept;
    std::span<const NodePtr> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    std::vector<NodePtr> nodes_;
};

NodePtr matmul(Tape& tape, const NodePtr& a, const NodePtr& b);
NodePtr add(Tape& tape, const NodePtr& a, const NodePtr& b);
NodePtr elementwise_mul(Tape& tape, const NodePtr& a, const NodePtr& b);
NodePtr scale(Tape& tape, const NodePtr& a, double c);
/// ReLU (subgradient 0 at exactly 0) or tanh, elementwise.
NodePtr activation(Tape& tape, const NodePtr& a, Activation kind = Activation::Relu);
/// Max-subtracted softmax over a 1xN row with exact Jacobian backward.
NodePtr softmax_row(Tape& tape, const NodePtr& a);
/// Scalar mean of squared differences against a constant target.
NodePtr mse_loss(Tape& tape, const NodePtr& pred, const Matrix& target);
NodePtr sum(Tape& tape, const NodePtr& a);
NodePtr transpose(Tape& tape, const NodePtr& a);
/// Stacks `top` above `bottom` (equal column counts).
NodePtr concat_rows(Tape& tape, const NodePtr& top, const NodePtr& bottom);
/// Places `left` beside `right` (equal row counts).
NodePtr concat_cols(Tape& tape, const NodePtr& left, const NodePtr& right);
NodePtr slice_rows(Tape& tape, const NodePtr& a, std::size_t begin, std::size_t count);
/// out[i] = table[ids[i]]; gradient scatters back into the selected rows only.
NodePtr gather_rows(Tape& tape, const NodePtr& table, std::span<const std::size_t> ids);

} // namespace hgcn

#endif // HGCN_AUTODIFF_HPP
