#ifndef HGCN_GRAPH_HPP
#define HGCN_GRAPH_HPP

#include "hgcn/autodiff.hpp"
#include "hgcn/matrix.hpp"

#include <cstddef>

namespace hgcn {

/// The three relations of one per-sample heterogeneous graph.
///
/// a_token is m x m (token chain), a_label is n x n, a_token_label is m x n
/// with entries in [0, 1].
struct AdjacencyBlocks {
    Matrix a_token;
    Matrix a_label;
    Matrix a_token_label;

    std::size_t token_count() const noexcept { return a_token.rows(); }
    std::size_t label_count() const noexcept { return a_label.rows(); }

    /// Chain token block, identity label block, all-zero token-label block.
    static AdjacencyBlocks initial(std::size_t m, std::size_t n);
};

/// Assembled (m+n) x (m+n) matrix [[a_token, a_tl], [a_tl^T, a_label]].
struct BlockAdjacency {
    Matrix full;
    std::size_t token_count = 0;
};

/// Undirected chain over m tokens in sequence order, with self-loops.
/// Symmetric, bandwidth 1, 3m-2 nonzeros. Throws ValidationError for m = 0.
Matrix build_chain_adjacency(std::size_t m);

/// n x n identity. Throws ValidationError for n = 0.
Matrix build_label_adjacency(std::size_t n);

BlockAdjacency assemble_block(const AdjacencyBlocks& blocks);

/// Differentiable assembly; only the token-label block carries gradient.
NodePtr assemble_block(Tape& tape, const Matrix& a_token, const Matrix& a_label,
                       const NodePtr& a_token_label);

/// D^-1/2 (A + I) D^-1/2 with D the row sums of (A + I).
///
/// `add_self_loops = false` skips the +I, for ablations where the input
/// already carries its own self-loops; rows must then have positive sums.
Matrix normalize_adjacency(const Matrix& a, bool add_self_loops = true);
NodePtr normalize_adjacency(Tape& tape, const NodePtr& a, bool add_self_loops = true);

/// Token-label edges from mapped cosine similarity: (cos(t_i, l_j) + 1) / 2.
///
/// A token or label row with zero norm produces 0 in every cell it touches
/// (not the 0.5 a literal cos=0 would give), so dead features never create
/// edges. Those cells pass no gradient.
Matrix cosine_edges(const Matrix& x_token, const Matrix& x_label);
NodePtr reconstruct_token_label(Tape& tape, const NodePtr& x_token, const NodePtr& x_label);

/// Row norms below this are treated as zero by the cosine routines.
inline constexpr double kZeroNorm = 1e-12;

} // namespace hgcn

#endif // HGCN_GRAPH_HPP
