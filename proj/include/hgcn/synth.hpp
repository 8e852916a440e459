#ifndef HGCN_SYNTH_HPP
#define HGCN_SYNTH_HPP

#include "hgcn/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace hgcn {

/// Trigger-word corpus: every label owns one or more exclusive trigger
/// tokens, and a sample carrying a label contains one of its triggers exactly
/// once, planted among random filler tokens.
struct SynthOptions {
    std::size_t n_labels = 5;
    /// Total distinct content tokens (triggers + fillers).
    std::size_t vocab_size = 60;
    std::size_t train = 500;
    std::size_t dev = 100;
    std::size_t test = 100;
    std::size_t min_filler = 4;
    std::size_t max_filler = 10;
    std::size_t min_labels = 1;
    std::size_t max_labels = 3;
    std::uint64_t seed = 1;
    /// Per-label trigger tokens. Empty means one generated trigger per label.
    std::vector<std::vector<std::string>> trigger_map;
    /// Pairs of label indices that must appear together or not at all.
    std::vector<std::pair<std::size_t, std::size_t>> co_occur;
    /// Pairs of label indices that never appear in the same sample.
    std::vector<std::pair<std::size_t, std::size_t>> exclusive;
};

struct SynthCorpus {
    std::vector<std::string> labels;
    std::vector<std::vector<std::string>> triggers;
    std::vector<std::string> fillers;
    std::vector<Sample> train;
    std::vector<Sample> dev;
    std::vector<Sample> test;
};

/// Deterministic per seed. Throws ValidationError when a trigger is shared
/// between labels or collides with a filler, when a label has no trigger, or
/// when the label-set constraints cannot be met.
SynthCorpus generate_synthetic_corpus(const SynthOptions& options);

/// Writes train.jsonl, dev.jsonl, test.jsonl and config.json (label set and
/// dataset paths) into `dir`, creating it if needed.
void write_synthetic_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

} // namespace hgcn

#endif // HGCN_SYNTH_HPP
