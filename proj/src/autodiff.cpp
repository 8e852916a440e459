#include "hgcn/autodiff.hpp"

#include "hgcn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hgcn {

std::string_view op_name(OpKind op) noexcept {
    switch (op) {
    case OpKind::Parameter: return "parameter";
    case OpKind::Constant: return "constant";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::ElementwiseMul: return "elementwise_mul";
    case OpKind::Scale: return "scale";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::SoftmaxRow: return "softmax_row";
    case OpKind::MseLoss: return "mse_loss";
    case OpKind::Sum: return "sum";
    case OpKind::Transpose: return "transpose";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::AssembleBlock: return "assemble_block";
    case OpKind::NormalizeAdjacency: return "normalize_adjacency";
    case OpKind::CosineEdges: return "cosine_edges";
    }
    return "unknown";
}

namespace {

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.all_finite()) {
        throw NumericError(std::string(what) + ": non-finite value");
    }
}

// Accumulates `delta` into a parent's grad when that parent participates in
// differentiation.
void accumulate(const NodePtr& parent, const Matrix& delta) {
    if (parent->requires_grad) {
        parent->grad += delta;
    }
}

} // namespace

NodePtr make_parameter(Matrix value) {
    require_finite(value, "parameter");
    auto node = std::make_shared<Node>();
    node->grad = Matrix(value.rows(), value.cols());
    node->value = std::move(value);
    node->op = OpKind::Parameter;
    node->requires_grad = true;
    return node;
}

NodePtr Tape::constant(Matrix value) {
    require_finite(value, "constant");
    auto node = std::make_shared<Node>();
    node->grad = Matrix(value.rows(), value.cols());
    node->value = std::move(value);
    node->op = OpKind::Constant;
    nodes_.push_back(node);
    return node;
}

NodePtr Tape::record(Matrix value, OpKind op, std::vector<NodePtr> parents,
                     std::function<void(Node&)> backward) {
    require_finite(value, op_name(op));
    auto node = std::make_shared<Node>();
    node->grad = Matrix(value.rows(), value.cols());
    node->value = std::move(value);
    node->op = op;
    node->requires_grad = std::any_of(parents.begin(), parents.end(),
                                      [](const NodePtr& p) { return p->requires_grad; });
    node->parents = std::move(parents);
    node->backward = std::move(backward);
    nodes_.push_back(node);
    return node;
}

bool Tape::contains(const Node* node) const noexcept {
    return std::any_of(nodes_.rbegin(), nodes_.rend(),
                       [node](const NodePtr& n) { return n.get() == node; });
}

void Tape::backward(const NodePtr& loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
        throw DimensionError("backward: loss must be 1x1, got " + loss->value.shape_string());
    }
    if (!contains(loss.get())) {
        throw std::invalid_argument("backward: loss node is not on this tape");
    }
    for (const auto& n : nodes_) {
        if (!n->is_leaf()) {
            n->zero_grad();
        }
    }
    loss->grad(0, 0) = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& n = **it;
        if (n.requires_grad && n.backward) {
            n.backward(n);
        }
    }
}

NodePtr matmul(Tape& tape, const NodePtr& a, const NodePtr& b) {
    return tape.record(hgcn::matmul(a->value, b->value), OpKind::MatMul, {a, b}, [](Node& self) {
        const auto& pa = self.parents[0];
        const auto& pb = self.parents[1];
        if (pa->requires_grad) {
            pa->grad += hgcn::matmul(self.grad, pb->value.transpose());
        }
        if (pb->requires_grad) {
            pb->grad += hgcn::matmul(pa->value.transpose(), self.grad);
        }
    });
}

NodePtr add(Tape& tape, const NodePtr& a, const NodePtr& b) {
    return tape.record(a->value + b->value, OpKind::Add, {a, b}, [](Node& self) {
        accumulate(self.parents[0], self.grad);
        accumulate(self.parents[1], self.grad);
    });
}

NodePtr elementwise_mul(Tape& tape, const NodePtr& a, const NodePtr& b) {
    return tape.record(hadamard(a->value, b->value), OpKind::ElementwiseMul, {a, b},
                       [](Node& self) {
                           const auto& pa = self.parents[0];
                           const auto& pb = self.parents[1];
                           if (pa->requires_grad) {
                               pa->grad += hadamard(self.grad, pb->value);
                           }
                           if (pb->requires_grad) {
                               pb->grad += hadamard(self.grad, pa->value);
                           }
                       });
}

NodePtr scale(Tape& tape, const NodePtr& a, double c) {
    if (!std::isfinite(c)) {
        throw NumericError("scale: non-finite factor");
    }
    return tape.record(a->value * c, OpKind::Scale, {a},
                       [c](Node& self) { accumulate(self.parents[0], self.grad * c); });
}

NodePtr activation(Tape& tape, const NodePtr& a, Activation kind) {
    Matrix out = a->value;
    if (kind == Activation::Relu) {
        for (double& v : out.data()) {
            v = v > 0.0 ? v : 0.0;
        }
        return tape.record(std::move(out), OpKind::Relu, {a}, [](Node& self) {
            const auto& p = self.parents[0];
            if (!p->requires_grad) {
                return;
            }
            auto in = p->value.data();
            auto g = self.grad.data();
            auto pg = p->grad.data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (in[i] > 0.0) {
                    pg[i] += g[i];
                }
            }
        });
    }
    for (double& v : out.data()) {
        v = std::tanh(v);
    }
    return tape.record(std::move(out), OpKind::Tanh, {a}, [](Node& self) {
        const auto& p = self.parents[0];
        if (!p->requires_grad) {
            return;
        }
        auto y = self.value.data();
        auto g = self.grad.data();
        auto pg = p->grad.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            pg[i] += g[i] * (1.0 - y[i] * y[i]);
        }
    });
}

NodePtr softmax_row(Tape& tape, const NodePtr& a) {
    if (a->value.rows() != 1) {
        throw DimensionError("softmax_row: expected a 1xN row, got " + a->value.shape_string());
    }
    if (a->value.cols() == 0) {
        throw DimensionError("softmax_row: empty vector");
    }
    auto in = a->value.data();
    const double mx = *std::max_element(in.begin(), in.end());
    Matrix out(1, in.size());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
        out(0, j) = std::exp(in[j] - mx);
        total += out(0, j);
    }
    out *= 1.0 / total;
    return tape.record(std::move(out), OpKind::SoftmaxRow, {a}, [](Node& self) {
        const auto& p = self.parents[0];
        if (!p->requires_grad) {
            return;
        }
        // dL/dx_j = y_j * (g_j - sum_k g_k y_k)
        auto y = self.value.data();
        auto g = self.grad.data();
        double dot = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) {
            dot += g[k] * y[k];
        }
        auto pg = p->grad.data();
        for (std::size_t j = 0; j < y.size(); ++j) {
            pg[j] += y[j] * (g[j] - dot);
        }
    });
}

NodePtr mse_loss(Tape& tape, const NodePtr& pred, const Matrix& target) {
    require_same_shape(pred->value, target, "mse_loss");
    if (target.empty()) {
        throw DimensionError("mse_loss: empty operands");
    }
    require_finite(target, "mse_loss target");
    Matrix diff = pred->value - target;
    double sq = 0.0;
    for (double d : diff.data()) {
        sq += d * d;
    }
    const double count = static_cast<double>(diff.size());
    Matrix out(1, 1, sq / count);
    return tape.record(std::move(out), OpKind::MseLoss, {pred},
                       [diff = std::move(diff), count](Node& self) {
                           accumulate(self.parents[0], diff * (2.0 * self.grad(0, 0) / count));
                       });
}

NodePtr sum(Tape& tape, const NodePtr& a) {
    return tape.record(Matrix(1, 1, a->value.sum()), OpKind::Sum, {a}, [](Node& self) {
        const auto& p = self.parents[0];
        accumulate(p, Matrix(p->value.rows(), p->value.cols(), self.grad(0, 0)));
    });
}

NodePtr transpose(Tape& tape, const NodePtr& a) {
    return tape.record(a->value.transpose(), OpKind::Transpose, {a},
                       [](Node& self) { accumulate(self.parents[0], self.grad.transpose()); });
}

NodePtr concat_rows(Tape& tape, const NodePtr& top, const NodePtr& bottom) {
    const Matrix& t = top->value;
    const Matrix& b = bottom->value;
    if (t.cols() != b.cols()) {
        throw DimensionError("concat_rows: column mismatch " + t.shape_string() + " vs " +
                             b.shape_string());
    }
    std::vector<double> data(t.data().begin(), t.data().end());
    data.insert(data.end(), b.data().begin(), b.data().end());
    Matrix out(t.rows() + b.rows(), t.cols(), std::move(data));
    return tape.record(std::move(out), OpKind::ConcatRows, {top, bottom}, [](Node& self) {
        const auto& pt = self.parents[0];
        const auto& pb = self.parents[1];
        const std::size_t split = pt->value.size();
        auto g = self.grad.data();
        if (pt->requires_grad) {
            auto pg = pt->grad.data();
            for (std::size_t i = 0; i < split; ++i) {
                pg[i] += g[i];
            }
        }
        if (pb->requires_grad) {
            auto pg = pb->grad.data();
            for (std::size_t i = 0; i < pg.size(); ++i) {
                pg[i] += g[split + i];
            }
        }
    });
}

NodePtr concat_cols(Tape& tape, const NodePtr& left, const NodePtr& right) {
    const Matrix& l = left->value;
    const Matrix& r = right->value;
    if (l.rows() != r.rows()) {
        throw DimensionError("concat_cols: row mismatch " + l.shape_string() + " vs " +
                             r.shape_string());
    }
    Matrix out(l.rows(), l.cols() + r.cols());
    for (std::size_t i = 0; i < l.rows(); ++i) {
        auto dst = out.row(i);
        std::copy(l.row(i).begin(), l.row(i).end(), dst.begin());
        std::copy(r.row(i).begin(), r.row(i).end(), dst.begin() + static_cast<long>(l.cols()));
    }
    return tape.record(std::move(out), OpKind::ConcatCols, {left, right}, [](Node& self) {
        const auto& pl = self.parents[0];
        const auto& pr = self.parents[1];
        const std::size_t lc = pl->value.cols();
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            auto g = self.grad.row(i);
            if (pl->requires_grad) {
                auto pg = pl->grad.row(i);
                for (std::size_t j = 0; j < lc; ++j) {
                    pg[j] += g[j];
                }
            }
            if (pr->requires_grad) {
                auto pg = pr->grad.row(i);
                for (std::size_t j = 0; j < pg.size(); ++j) {
                    pg[j] += g[lc + j];
                }
            }
        }
    });
}

NodePtr slice_rows(Tape& tape, const NodePtr& a, std::size_t begin, std::size_t count) {
    const Matrix& v = a->value;
    if (begin + count > v.rows()) {
        throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                             std::to_string(begin + count) + ") out of range for " +
                             v.shape_string());
    }
    auto src = v.data().subspan(begin * v.cols(), count * v.cols());
    Matrix out(count, v.cols(), std::vector<double>(src.begin(), src.end()));
    return tape.record(std::move(out), OpKind::SliceRows, {a}, [begin](Node& self) {
        const auto& p = self.parents[0];
        if (!p->requires_grad) {
            return;
        }
        auto g = self.grad.data();
        auto pg = p->grad.data().subspan(begin * p->value.cols(), g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            pg[i] += g[i];
        }
    });
}

NodePtr gather_rows(Tape& tape, const NodePtr& table, std::span<const std::size_t> ids) {
    const Matrix& t = table->value;
    Matrix out(ids.size(), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= t.rows()) {
            throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                                 " out of range for " + t.shape_string());
        }
        std::copy(t.row(ids[i]).begin(), t.row(ids[i]).end(), out.row(i).begin());
    }
    std::vector<std::size_t> idx(ids.begin(), ids.end());
    return tape.record(std::move(out), OpKind::GatherRows, {table},
                       [idx = std::move(idx)](Node& self) {
                           const auto& p = self.parents[0];
                           if (!p->requires_grad) {
                               return;
                           }
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                               auto g = self.grad.row(i);
                               auto pg = p->grad.row(idx[i]);
                               for (std::size_t j = 0; j < g.size(); ++j) {
                                   pg[j] += g[j];
                               }
                           }
                       });
}

} // namespace hgcn
