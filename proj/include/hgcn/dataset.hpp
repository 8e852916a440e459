#ifndef HGCN_DATASET_HPP
#define HGCN_DATASET_HPP

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hgcn {

/// A keyword marked as evidence for a label, with its annotated intensity.
struct KeywordAnnotation {
    std::size_t token_index = 0; // into Sample::tokens
    std::string label;
    double intensity = 0.0;

    friend bool operator==(const KeywordAnnotation&, const KeywordAnnotation&) = default;
};

struct Sample {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<std::string> labels;
    std::vector<KeywordAnnotation> annotations;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// JSON-lines reader. Each non-blank line is an object with "id", either
/// "tokens" (array of strings) or "text" (whitespace-tokenized), "labels"
/// (array of names from `label_set`) and optionally "annotations"
/// ([{"token": i, "label": name, "intensity": x}]).
///
/// Throws ValidationError citing the 1-based line number on malformed input
/// or unknown label names.
std::vector<Sample> load_dataset(const std::filesystem::path& path,
                                 std::span<const std::string> label_set);

void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples);

nlohmann::json sample_to_json(const Sample& s);
/// Validates one decoded line; `line_no` is used in error messages only.
Sample sample_from_json(const nlohmann::json& j, std::span<const std::string> label_set,
                        std::size_t line_no);

} // namespace hgcn

#endif // HGCN_DATASET_HPP
