#include "hgcn/graph.hpp"

#include "hgcn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hgcn {

AdjacencyBlocks AdjacencyBlocks::initial(std::size_t m, std::size_t n) {
    return {build_chain_adjacency(m), build_label_adjacency(n), Matrix::zeros(m, n)};
}

Matrix build_chain_adjacency(std::size_t m) {
    if (m == 0) {
        throw ValidationError("chain adjacency needs at least one token node");
    }
    Matrix a(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        a(i, i) = 1.0;
        if (i + 1 < m) {
            a(i, i + 1) = 1.0;
            a(i + 1, i) = 1.0;
        }
    }
    return a;
}

Matrix build_label_adjacency(std::size_t n) {
    if (n == 0) {
        throw ValidationError("label adjacency needs at least one label node");
    }
    return Matrix::identity(n);
}

namespace {

void check_blocks(const Matrix& a_token, const Matrix& a_label, const Matrix& a_tl) {
    if (a_token.rows() != a_token.cols() || a_label.rows() != a_label.cols() ||
        a_tl.rows() != a_token.rows() || a_tl.cols() != a_label.rows()) {
        throw DimensionError("assemble_block: incompatible blocks a_token " +
                             a_token.shape_string() + ", a_label " + a_label.shape_string() +
                             ", a_token_label " + a_tl.shape_string());
    }
}

Matrix assemble(const Matrix& a_token, const Matrix& a_label, const Matrix& a_tl) {
    check_blocks(a_token, a_label, a_tl);
    const std::size_t m = a_token.rows();
    const std::size_t n = a_label.rows();
    Matrix full(m + n, m + n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            full(i, j) = a_token(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) {
            full(i, m + j) = a_tl(i, j);
            full(m + j, i) = a_tl(i, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            full(m + i, m + j) = a_label(i, j);
        }
    }
    return full;
}

struct Normalized {
    Matrix out;
    Matrix augmented;
    std::vector<double> inv_sqrt_deg;
};

Normalized normalize_impl(const Matrix& a, bool add_self_loops) {
    if (a.rows() != a.cols()) {
        throw DimensionError("normalize_adjacency: matrix must be square, got " +
                             a.shape_string());
    }
    const std::size_t n = a.rows();
    Normalized r{Matrix(n, n), a, std::vector<double>(n)};
    std::vector<double> degrees(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (add_self_loops) {
            r.augmented(i, i) += 1.0;
        }
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (a(i, j) < 0.0) {
                throw ValidationError("normalize_adjacency: negative edge weight at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            }
            deg += r.augmented(i, j);
        }
        if (!(deg > 0.0)) {
            throw ValidationError("normalize_adjacency: row " + std::to_string(i) +
                                  " has zero degree");
        }
        degrees[i] = deg;
        r.inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    // Divide once by sqrt(deg_i * deg_j) instead of multiplying two rounded
    // reciprocals, and cap at 1 so a lone self-loop stays exactly 1.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = r.augmented(i, j) / std::sqrt(degrees[i] * degrees[j]);
            r.out(i, j) = std::min(v, 1.0);
        }
    }
    return r;
}

struct Cosine {
    Matrix edges;
    Matrix cos;
    Matrix unit_token;
    Matrix unit_label;
    std::vector<double> norm_token;
    std::vector<double> norm_label;
};

void unit_rows(const Matrix& x, Matrix& unit, std::vector<double>& norms) {
    unit = Matrix(x.rows(), x.cols());
    norms.assign(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double sq = 0.0;
        for (double v : x.row(i)) {
            sq += v * v;
        }
        const double nrm = std::sqrt(sq);
        norms[i] = nrm;
        if (nrm < kZeroNorm) {
            continue;
        }
        auto src = x.row(i);
        auto dst = unit.row(i);
        for (std::size_t k = 0; k < src.size(); ++k) {
            dst[k] = src[k] / nrm;
        }
    }
}

Cosine cosine_impl(const Matrix& x_token, const Matrix& x_label) {
    if (x_token.cols() != x_label.cols()) {
        throw DimensionError("reconstruct_token_label: hidden width mismatch " +
                             x_token.shape_string() + " vs " + x_label.shape_string());
    }
    Cosine c;
    unit_rows(x_token, c.unit_token, c.norm_token);
    unit_rows(x_label, c.unit_label, c.norm_label);
    c.cos = matmul(c.unit_token, c.unit_label.transpose());
    c.edges = Matrix(x_token.rows(), x_label.rows());
    for (std::size_t i = 0; i < x_token.rows(); ++i) {
        for (std::size_t j = 0; j < x_label.rows(); ++j) {
            if (c.norm_token[i] < kZeroNorm || c.norm_label[j] < kZeroNorm) {
                c.cos(i, j) = 0.0;
                continue;
            }
            // Rounding can push |cos| a hair past 1.
            const double v = std::clamp(c.cos(i, j), -1.0, 1.0);
            c.cos(i, j) = v;
            c.edges(i, j) = 0.5 * (v + 1.0);
        }
    }
    return c;
}

} // namespace

BlockAdjacency assemble_block(const AdjacencyBlocks& blocks) {
    return {assemble(blocks.a_token, blocks.a_label, blocks.a_token_label),
            blocks.a_token.rows()};
}

NodePtr assemble_block(Tape& tape, const Matrix& a_token, const Matrix& a_label,
                       const NodePtr& a_token_label) {
    Matrix full = assemble(a_token, a_label, a_token_label->value);
    const std::size_t m = a_token.rows();
    return tape.record(std::move(full), OpKind::AssembleBlock, {a_token_label}, [m](Node& self) {
        const auto& p = self.parents[0];
        if (!p->requires_grad) {
            return;
        }
        const std::size_t n = p->value.cols();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                p->grad(i, j) += self.grad(i, m + j) + self.grad(m + j, i);
            }
        }
    });
}

Matrix normalize_adjacency(const Matrix& a, bool add_self_loops) {
    return normalize_impl(a, add_self_loops).out;
}

NodePtr normalize_adjacency(Tape& tape, const NodePtr& a, bool add_self_loops) {
    Normalized r = normalize_impl(a->value, add_self_loops);
    Matrix out = std::move(r.out);
    return tape.record(
        std::move(out), OpKind::NormalizeAdjacency, {a},
        [aug = std::move(r.augmented), s = std::move(r.inv_sqrt_deg)](Node& self) {
            const auto& p = self.parents[0];
            if (!p->requires_grad) {
                return;
            }
            const std::size_t n = aug.rows();
            const Matrix& g = self.grad;
            // N_ij = s_i A_ij s_j with s_k = deg_k^-1/2 and deg_k = sum_j A_kj.
            std::vector<double> d_deg(n, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                double d_s = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    d_s += g(k, j) * aug(k, j) * s[j] + g(j, k) * s[j] * aug(j, k);
                }
                d_deg[k] = -0.5 * d_s * s[k] * s[k] * s[k];
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    p->grad(i, j) += g(i, j) * s[i] * s[j] + d_deg[i];
                }
            }
        });
}

Matrix cosine_edges(const Matrix& x_token, const Matrix& x_label) {
    return cosine_impl(x_token, x_label).edges;
}

NodePtr reconstruct_token_label(Tape& tape, const NodePtr& x_token, const NodePtr& x_label) {
    Cosine c = cosine_impl(x_token->value, x_label->value);
    Matrix edges = std::move(c.edges);
    return tape.record(
        std::move(edges), OpKind::CosineEdges, {x_token, x_label},
        [c = std::move(c)](Node& self) {
            const auto& pt = self.parents[0];
            const auto& pl = self.parents[1];
            const std::size_t m = c.cos.rows();
            const std::size_t n = c.cos.cols();
            const std::size_t h = c.unit_token.cols();
            // d edge / d u = 0.5 / |u| * (v_hat - cos * u_hat), symmetric in v.
            for (std::size_t i = 0; i < m; ++i) {
                if (c.norm_token[i] < kZeroNorm) {
                    continue;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (c.norm_label[j] < kZeroNorm) {
                        continue;
                    }
                    const double g = 0.5 * self.grad(i, j);
                    if (g == 0.0) {
                        continue;
                    }
                    const double cs = c.cos(i, j);
                    const auto ut = c.unit_token.row(i);
                    const auto ul = c.unit_label.row(j);
                    if (pt->requires_grad) {
                        auto dst = pt->grad.row(i);
                        const double f = g / c.norm_token[i];
                        for (std::size_t k = 0; k < h; ++k) {
                            dst[k] += f * (ul[k] - cs * ut[k]);
                        }
                    }
                    if (pl->requires_grad) {
                        auto dst = pl->grad.row(j);
                        const double f = g / c.norm_label[j];
                        for (std::size_t k = 0; k < h; ++k) {
                            dst[k] += f * (ut[k] - cs * ul[k]);
                        }
                    }
                }
            }
        });
}

} // namespace hgcn
