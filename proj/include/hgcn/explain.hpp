#ifndef HGCN_EXPLAIN_HPP
#define HGCN_EXPLAIN_HPP

#include "hgcn/matrix.hpp"
#include "hgcn/metrics.hpp"
#include "hgcn/model.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hgcn {

/// Final token-label edge weights rescaled to sum to 1 over the whole matrix.
struct AttributionMatrix {
    Matrix values;
    std::vector<std::string> tokens;
    std::vector<std::string> labels;
    /// The source matrix was all zero and `values` is the uniform fallback.
    bool degenerate = false;
};

AttributionMatrix build_attribution(const Matrix& token_label, std::vector<std::string> tokens,
                                    std::vector<std::string> labels);
AttributionMatrix build_attribution(const ForwardTrace& trace, std::vector<std::string> tokens,
                                    std::vector<std::string> labels);

/// Keyword-intensity annotation: token row, label column, intensity in [0,1].
struct KeywordCell {
    std::size_t row = 0;
    std::size_t label = 0;
    double intensity = 0.0;
};

/// m x n matrix holding annotated intensities at keyword cells and zero
/// everywhere else. Unlike AttributionMatrix it is not normalized.
struct GoldenAttribution {
    Matrix values;
};

GoldenAttribution build_golden(std::size_t m, std::size_t n, std::span<const KeywordCell> cells);

/// Mean squared elementwise difference for one sample.
double attribution_mse(const AttributionMatrix& pred, const GoldenAttribution& golden);
/// Per-sample MSE averaged over an evaluation set.
double attribution_mse(std::span<const AttributionMatrix> preds,
                       std::span<const GoldenAttribution> goldens);

/// Pearson correlation between per-label binary indicator vectors over the
/// prediction list. Zero-variance labels correlate 0 with every other label;
/// the diagonal is always 1.
Matrix pearson_matrix(std::span<const LabelSet> predictions, std::size_t n);

/// Signed cosine similarity between label representations (rows).
/// Zero-norm rows: 0 off the diagonal, 1 on it.
Matrix label_cosine_matrix(const Matrix& label_features);

struct CorrelationReport {
    Matrix pearson;
    Matrix cosine;
};

/// Writes `<stem>.csv` (exact values) and `<stem>.svg` (one rect per cell,
/// brightness linear in value between the matrix min and max).
///
/// CSV: header row is an empty corner cell followed by the column names;
/// every following row is the row name then the values in "%.17g".
void render_heatmap(const Matrix& matrix, std::span<const std::string> row_names,
                    std::span<const std::string> col_names, const std::filesystem::path& stem);

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
};

/// Parses the CSV written by render_heatmap.
LabeledMatrix read_heatmap_csv(const std::filesystem::path& path);

/// Fill brightness in [0, 255] for `value` on the linear scale [lo, hi].
int heatmap_brightness(double value, double lo, double hi);

} // namespace hgcn

#endif // HGCN_EXPLAIN_HPP
