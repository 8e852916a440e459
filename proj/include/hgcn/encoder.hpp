#ifndef HGCN_ENCODER_HPP
#define HGCN_ENCODER_HPP

#include "hgcn/autodiff.hpp"
#include "hgcn/matrix.hpp"
#include "hgcn/rng.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hgcn {

/// Dense token -> id map with four reserved ids.
class Vocabulary {
public:
    static constexpr std::size_t kSeqStart = 0;
    static constexpr std::size_t kSeqEnd = 1;
    static constexpr std::size_t kUnknown = 2;
    static constexpr std::size_t kPad = 3;
    static constexpr std::size_t kReserved = 4;

    Vocabulary();
    /// Reserved entries plus every distinct token in first-seen order.
    static Vocabulary build(std::span<const std::vector<std::string>> documents);
    /// Rebuilds from the full id-ordered token list (reserved names first).
    static Vocabulary from_tokens(std::vector<std::string> id_to_token);

    std::size_t add(const std::string& token);
    /// kUnknown for out-of-vocabulary tokens.
    std::size_t id(const std::string& token) const;
    const std::string& token(std::size_t id) const { return id_to_token_.at(id); }
    std::size_t size() const noexcept { return id_to_token_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::size_t> token_to_id_;
};

/// Splits on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view text);

/// [SEQ_START] + ids truncated to max_len - 2 + [SEQ_END]. max_len >= 3.
std::vector<std::size_t> tokenize(std::span<const std::string> tokens, const Vocabulary& vocab,
                                  std::size_t max_len);

/// Source of the initial token-node features X_token.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t width() const noexcept = 0;
    /// m x width features for one tokenized sample, recorded on `tape`.
    virtual NodePtr embed(Tape& tape, std::string_view sample_id,
                          std::span<const std::size_t> ids) const = 0;
    /// Parameters updated by training; empty for frozen providers.
    virtual std::vector<NodePtr> parameters() const = 0;
    /// "lookup" or "file:<path>".
    virtual std::string describe() const = 0;
};

/// |V| x d table of learned vectors. With `frozen` the table is treated as a
/// constant and exposes no parameters.
class TrainableLookup final : public EmbeddingProvider {
public:
    TrainableLookup(std::size_t vocab_size, std::size_t width, Rng& rng, bool frozen = false);
    TrainableLookup(Matrix table, bool frozen);

    std::size_t width() const noexcept override { return table_->value.cols(); }
    NodePtr embed(Tape& tape, std::string_view sample_id,
                  std::span<const std::size_t> ids) const override;
    std::vector<NodePtr> parameters() const override;
    std::string describe() const override { return "lookup"; }

    const Matrix& table() const noexcept { return table_->value; }
    bool frozen() const noexcept { return frozen_; }

private:
    NodePtr table_;
    bool frozen_;
};

/// Per-sample vectors read from an archive whose tensors are keyed by sample
/// id (meta: {"kind": "embeddings", "width": d}). Never trained.
class PrecomputedFile final : public EmbeddingProvider {
public:
    explicit PrecomputedFile(const std::filesystem::path& path);
    PrecomputedFile(std::map<std::string, Matrix, std::less<>> vectors, std::size_t width);

    std::size_t width() const noexcept override { return width_; }
    NodePtr embed(Tape& tape, std::string_view sample_id,
                  std::span<const std::size_t> ids) const override;
    std::vector<NodePtr> parameters() const override { return {}; }
    std::string describe() const override { return "file:" + path_.string(); }

    /// Writes `vectors` in the format read by the path constructor.
    static void write(const std::filesystem::path& path,
                      const std::map<std::string, Matrix, std::less<>>& vectors,
                      std::size_t width);

private:
    std::filesystem::path path_;
    std::map<std::string, Matrix, std::less<>> vectors_;
    std::size_t width_ = 0;
};

} // namespace hgcn

#endif // HGCN_ENCODER_HPP
