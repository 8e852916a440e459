#ifndef HGCN_METRICS_HPP
#define HGCN_METRICS_HPP

#include "hgcn/matrix.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hgcn {

/// Sorted, duplicate-free label indices.
using LabelSet = std::vector<std::size_t>;

/// Column sums of the final token-label block: one score per label.
std::vector<double> score_labels(const Matrix& a_token_label_last);

/// The min(k, n) most probable labels; ties go to the lower index.
LabelSet decode_topk(std::span<const double> probs, std::size_t k);

/// { j : probs[j] >= t } for t in (0, 1]. May be empty.
LabelSet decode_threshold(std::span<const double> probs, double t);

struct DecodeMethod {
    enum class Kind { TopK, Threshold } kind = Kind::TopK;
    std::size_t k = 1;
    double threshold = 0.5;

    static DecodeMethod topk(std::size_t k) { return {Kind::TopK, k, 0.0}; }
    static DecodeMethod thresholded(double t) { return {Kind::Threshold, 0, t}; }
    /// "topk:K" or "thr:T"; T may be a fraction such as "2/11".
    static DecodeMethod parse(const std::string& spec);
    std::string to_string() const;
    LabelSet apply(std::span<const double> probs) const;
};

struct Prediction {
    std::vector<double> probs;
    LabelSet chosen;
};

/// Mean per-sample |Y & Yhat| / |Y | Yhat|. A sample where both sets are
/// empty counts as 1.
double jaccard(std::span<const LabelSet> preds, std::span<const LabelSet> golds);

struct LabelStats {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct F1Scores {
    double micro = 0.0;
    double macro = 0.0;
    std::vector<LabelStats> per_label;
};

/// Micro F1 from pooled counts; macro F1 as the unweighted mean over all n
/// labels. Zero denominators give 0.
F1Scores micro_macro_f1(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                        std::size_t n);

struct EvalReport {
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    double jaccard = 0.0;
    std::size_t samples = 0;
    std::vector<std::string> label_names;
    std::vector<LabelStats> per_label;

    /// One "key value" line per metric followed by the per-label table.
    std::string to_text() const;
    nlohmann::json to_json() const;
};

EvalReport evaluate(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                    const std::vector<std::string>& label_names);

} // namespace hgcn

#endif // HGCN_METRICS_HPP
