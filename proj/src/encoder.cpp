#include "hgcn/encoder.hpp"

#include "hgcn/archive.hpp"
#include "hgcn/error.hpp"

#include <algorithm>
#include <cctype>

namespace hgcn {

namespace {
const std::vector<std::string> kReservedNames = {"[SEQ_START]", "[SEQ_END]", "[UNK]", "[PAD]"};
}

Vocabulary::Vocabulary() {
    for (const auto& name : kReservedNames) {
        add(name);
    }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> documents) {
    Vocabulary v;
    for (const auto& doc : documents) {
        for (const auto& tok : doc) {
            v.add(tok);
        }
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
    if (id_to_token.size() < kReserved ||
        !std::equal(kReservedNames.begin(), kReservedNames.end(), id_to_token.begin())) {
        throw ValidationError("vocabulary must start with the reserved tokens");
    }
    Vocabulary v;
    for (std::size_t i = kReserved; i < id_to_token.size(); ++i) {
        if (v.add(id_to_token[i]) != i) {
            throw ValidationError("duplicate vocabulary entry '" + id_to_token[i] + "'");
        }
    }
    return v;
}

std::size_t Vocabulary::add(const std::string& token) {
    auto [it, inserted] = token_to_id_.try_emplace(token, id_to_token_.size());
    if (inserted) {
        id_to_token_.push_back(token);
    }
    return it->second;
}

std::size_t Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnknown : it->second;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i > start) {
            out.emplace_back(text.substr(start, i - start));
        }
    }
    return out;
}

std::vector<std::size_t> tokenize(std::span<const std::string> tokens, const Vocabulary& vocab,
                                  std::size_t max_len) {
    if (max_len < 3) {
        throw ValidationError("max_len must be at least 3, got " + std::to_string(max_len));
    }
    const std::size_t content = std::min(tokens.size(), max_len - 2);
    std::vector<std::size_t> ids;
    ids.reserve(content + 2);
    ids.push_back(Vocabulary::kSeqStart);
    for (std::size_t i = 0; i < content; ++i) {
        ids.push_back(vocab.id(tokens[i]));
    }
    ids.push_back(Vocabulary::kSeqEnd);
    return ids;
}

namespace {

Matrix random_table(std::size_t vocab_size, std::size_t width, Rng& rng) {
    if (vocab_size == 0 || width == 0) {
        throw ValidationError("embedding table needs a nonzero shape");
    }
    Matrix table(vocab_size, width);
    for (double& v : table.data()) {
        v = rng.uniform(-1.0, 1.0);
    }
    return table;
}

} // namespace

TrainableLookup::TrainableLookup(std::size_t vocab_size, std::size_t width, Rng& rng, bool frozen)
    : TrainableLookup(random_table(vocab_size, width, rng), frozen) {}

TrainableLookup::TrainableLookup(Matrix table, bool frozen)
    : table_(make_parameter(std::move(table))), frozen_(frozen) {
    table_->requires_grad = !frozen;
}

NodePtr TrainableLookup::embed(Tape& tape, std::string_view /*sample_id*/,
                               std::span<const std::size_t> ids) const {
    return gather_rows(tape, table_, ids);
}

std::vector<NodePtr> TrainableLookup::parameters() const {
    if (frozen_) {
        return {};
    }
    return {table_};
}

PrecomputedFile::PrecomputedFile(const std::filesystem::path& path) : path_(path) {
    TensorArchive archive = read_archive(path);
    if (archive.meta.value("kind", std::string()) != "embeddings") {
        throw IoError("'" + path.string() + "' is not an embeddings archive");
    }
    width_ = archive.meta.value("width", std::size_t{0});
    if (width_ == 0) {
        throw IoError("'" + path.string() + "': embeddings archive declares no width");
    }
    for (auto& [name, m] : archive.tensors) {
        if (m.cols() != width_) {
            throw IoError("'" + path.string() + "': sample '" + name + "' has width " +
                          std::to_string(m.cols()) + ", expected " + std::to_string(width_));
        }
        vectors_.emplace(name, std::move(m));
    }
}

PrecomputedFile::PrecomputedFile(std::map<std::string, Matrix, std::less<>> vectors,
                                 std::size_t width)
    : vectors_(std::move(vectors)), width_(width) {}

NodePtr PrecomputedFile::embed(Tape& tape, std::string_view sample_id,
                               std::span<const std::size_t> ids) const {
    auto it = vectors_.find(sample_id);
    if (it == vectors_.end()) {
        throw IoError("no precomputed vectors for sample '" + std::string(sample_id) + "'");
    }
    if (it->second.rows() != ids.size()) {
        throw IoError("precomputed vectors for sample '" + std::string(sample_id) + "' have " +
                      std::to_string(it->second.rows()) + " rows, tokenized length is " +
                      std::to_string(ids.size()));
    }
    return tape.constant(it->second);
}

void PrecomputedFile::write(const std::filesystem::path& path,
                            const std::map<std::string, Matrix, std::less<>>& vectors,
                            std::size_t width) {
    TensorArchive archive;
    archive.meta = {{"kind", "embeddings"}, {"width", width}};
    for (const auto& [id, m] : vectors) {
        if (m.cols() != width) {
            throw DimensionError("sample '" + id + "' vectors are " + m.shape_string() +
                                 ", expected width " + std::to_string(width));
        }
        archive.add(id, m);
    }
    write_archive(path, archive);
}

} // namespace hgcn
