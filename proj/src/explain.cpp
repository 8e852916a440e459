#include "hgcn/explain.hpp"

#include "hgcn/error.hpp"
#include "hgcn/graph.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace hgcn {

AttributionMatrix build_attribution(const Matrix& token_label, std::vector<std::string> tokens,
                                    std::vector<std::string> labels) {
    if (tokens.size() != token_label.rows() || labels.size() != token_label.cols()) {
        throw DimensionError(fmt::format("attribution: {} tokens and {} labels for a {} matrix",
                                         tokens.size(), labels.size(),
                                         token_label.shape_string()));
    }
    AttributionMatrix a{token_label, std::move(tokens), std::move(labels), false};
    const double total = token_label.sum();
    if (total > 0.0) {
        a.values *= 1.0 / total;
    } else {
        spdlog::warn("attribution: token-label matrix is all zero, using uniform weights");
        a.values.fill(1.0 / static_cast<double>(token_label.size()));
        a.degenerate = true;
    }
    return a;
}

AttributionMatrix build_attribution(const ForwardTrace& trace, std::vector<std::string> tokens,
                                    std::vector<std::string> labels) {
    return build_attribution(trace.final_token_label(), std::move(tokens), std::move(labels));
}

GoldenAttribution build_golden(std::size_t m, std::size_t n, std::span<const KeywordCell> cells) {
    GoldenAttribution g{Matrix(m, n)};
    for (const auto& c : cells) {
        if (c.row >= m || c.label >= n) {
            throw DimensionError(fmt::format("golden cell ({}, {}) outside {}x{}", c.row, c.label,
                                             m, n));
        }
        if (!(c.intensity >= 0.0 && c.intensity <= 1.0)) {
            throw ValidationError(fmt::format("golden intensity {} outside [0, 1]", c.intensity));
        }
        g.values(c.row, c.label) = c.intensity;
    }
    return g;
}

double attribution_mse(const AttributionMatrix& pred, const GoldenAttribution& golden) {
    require_same_shape(pred.values, golden.values, "attribution_mse");
    if (pred.values.empty()) {
        throw DimensionError("attribution_mse: empty matrices");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const double d = pred.values.data()[i] - golden.values.data()[i];
        sq += d * d;
    }
    return sq / static_cast<double>(pred.values.size());
}

double attribution_mse(std::span<const AttributionMatrix> preds,
                       std::span<const GoldenAttribution> goldens) {
    if (preds.size() != goldens.size() || preds.empty()) {
        throw ValidationError(fmt::format("attribution_mse: {} predictions vs {} goldens",
                                          preds.size(), goldens.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        total += attribution_mse(preds[i], goldens[i]);
    }
    return total / static_cast<double>(preds.size());
}

Matrix pearson_matrix(std::span<const LabelSet> predictions, std::size_t n) {
    if (predictions.empty()) {
        throw ValidationError("pearson_matrix: no predictions");
    }
    const std::size_t count = predictions.size();
    // Centered indicator vectors, one row per label.
    Matrix x(n, count);
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t j : predictions[s]) {
            if (j >= n) {
                throw ValidationError(fmt::format("label index {} out of range for {}", j, n));
            }
            x(j, s) = 1.0;
        }
    }
    std::vector<double> norm(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        auto row = x.row(j);
        double mean = 0.0;
        for (double v : row) {
            mean += v;
        }
        mean /= static_cast<double>(count);
        double sq = 0.0;
        for (double& v : row) {
            v -= mean;
            sq += v * v;
        }
        norm[j] = std::sqrt(sq);
    }
    Matrix r = Matrix::identity(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double v = 0.0;
            if (norm[a] > 0.0 && norm[b] > 0.0) {
                double dot = 0.0;
                for (std::size_t s = 0; s < count; ++s) {
                    dot += x(a, s) * x(b, s);
                }
                v = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
            }
            r(a, b) = v;
            r(b, a) = v;
        }
    }
    return r;
}

Matrix label_cosine_matrix(const Matrix& label_features) {
    const std::size_t n = label_features.rows();
    std::vector<double> norm(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double sq = 0.0;
        for (double v : label_features.row(j)) {
            sq += v * v;
        }
        norm[j] = std::sqrt(sq);
    }
    Matrix c = Matrix::identity(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double v = 0.0;
            if (norm[a] >= kZeroNorm && norm[b] >= kZeroNorm) {
                double dot = 0.0;
                const auto ra = label_features.row(a);
                const auto rb = label_features.row(b);
                for (std::size_t k = 0; k < ra.size(); ++k) {
                    dot += ra[k] * rb[k];
                }
                v = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
            }
            c(a, b) = v;
            c(b, a) = v;
        }
    }
    return c;
}

int heatmap_brightness(double value, double lo, double hi) {
    if (!(hi > lo)) {
        return 255;
    }
    const double t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<int>(std::lround(255.0 * t));
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) {
        throw IoError("unterminated quoted CSV field");
    }
    return fields;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f << content;
    if (!f) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

} // namespace

void render_heatmap(const Matrix& matrix, std::span<const std::string> row_names,
                    std::span<const std::string> col_names, const std::filesystem::path& stem) {
    if (row_names.size() != matrix.rows() || col_names.size() != matrix.cols()) {
        throw DimensionError(fmt::format("heatmap: {} row names and {} column names for a {} "
                                         "matrix",
                                         row_names.size(), col_names.size(),
                                         matrix.shape_string()));
    }
    std::string csv;
    for (const auto& c : col_names) {
        csv += "," + csv_field(c);
    }
    csv += "\n";
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        csv += csv_field(row_names[i]);
        for (double v : matrix.row(i)) {
            csv += fmt::format(",{:.17g}", v);
        }
        csv += "\n";
    }

    double lo = 0.0;
    double hi = 0.0;
    if (!matrix.empty()) {
        const auto [mn, mx] = std::minmax_element(matrix.data().begin(), matrix.data().end());
        lo = *mn;
        hi = *mx;
    }
    constexpr int cell = 24;
    constexpr int margin_left = 120;
    constexpr int margin_top = 100;
    const auto width = margin_left + cell * static_cast<int>(matrix.cols()) + 10;
    const auto height = margin_top + cell * static_cast<int>(matrix.rows()) + 10;
    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
        "data-min=\"{:.17g}\" data-max=\"{:.17g}\">\n",
        width, height, lo, hi);
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        const int x = margin_left + cell * static_cast<int>(j) + cell / 2;
        svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" "
                           "transform=\"rotate(-60 {} {})\">{}</text>\n",
                           x, margin_top - 4, x, margin_top - 4, xml_escape(col_names[j]));
    }
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        const int y = margin_top + cell * static_cast<int>(i);
        svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
                           margin_left - 4, y + cell / 2 + 4, xml_escape(row_names[i]));
        for (std::size_t j = 0; j < matrix.cols(); ++j) {
            const double v = matrix(i, j);
            const int b = heatmap_brightness(v, lo, hi);
            svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
                               "fill=\"rgb({},{},{})\" data-row=\"{}\" data-col=\"{}\" "
                               "data-value=\"{:.17g}\"/>\n",
                               margin_left + cell * static_cast<int>(j), y, cell, cell, b, b, b,
                               i, j, v);
        }
    }
    svg += "</svg>\n";

    write_file(std::filesystem::path(stem).concat(".csv"), csv);
    write_file(std::filesystem::path(stem).concat(".svg"), svg);
}

LabeledMatrix read_heatmap_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(f, line)) {
        throw IoError("'" + path.string() + "' is empty");
    }
    LabeledMatrix out;
    auto header = parse_csv_line(line);
    out.col_names.assign(header.begin() + 1, header.end());
    std::vector<double> data;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != out.col_names.size() + 1) {
            throw IoError(fmt::format("'{}' line {}: expected {} fields, got {}", path.string(),
                                      line_no, out.col_names.size() + 1, fields.size()));
        }
        out.row_names.push_back(fields[0]);
        for (std::size_t k = 1; k < fields.size(); ++k) {
            try {
                data.push_back(std::stod(fields[k]));
            } catch (const std::logic_error&) {
                throw IoError(fmt::format("'{}' line {}: bad number '{}'", path.string(), line_no,
                                          fields[k]));
            }
        }
    }
    out.values = Matrix(out.row_names.size(), out.col_names.size(), std::move(data));
    return out;
}

} // namespace hgcn
