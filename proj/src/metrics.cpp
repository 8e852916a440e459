#include "hgcn/metrics.hpp"

#include "hgcn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hgcn {

std::vector<double> score_labels(const Matrix& a_token_label_last) {
    std::vector<double> scores(a_token_label_last.cols(), 0.0);
    for (std::size_t i = 0; i < a_token_label_last.rows(); ++i) {
        const auto row = a_token_label_last.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            scores[j] += row[j];
        }
    }
    return scores;
}

LabelSet decode_topk(std::span<const double> probs, std::size_t k) {
    if (k == 0) {
        throw ValidationError("top-k decoding needs k >= 1");
    }
    LabelSet order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, probs.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
                      });
    order.resize(take);
    std::sort(order.begin(), order.end());
    return order;
}

LabelSet decode_threshold(std::span<const double> probs, double t) {
    if (!(t > 0.0 && t <= 1.0)) {
        throw ValidationError("threshold must lie in (0, 1], got " + std::to_string(t));
    }
    LabelSet out;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] >= t) {
            out.push_back(j);
        }
    }
    return out;
}

namespace {

double parse_real(const std::string& text) {
    std::size_t used = 0;
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            const double num = std::stod(text.substr(0, slash), &used);
            if (used != slash) {
                throw std::invalid_argument(text);
            }
            const std::string rest = text.substr(slash + 1);
            const double den = std::stod(rest, &used);
            if (used != rest.size() || den == 0.0) {
                throw std::invalid_argument(text);
            }
            return num / den;
        }
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::logic_error&) {
        throw ValidationError("cannot parse number '" + text + "'");
    }
}

} // namespace

DecodeMethod DecodeMethod::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "topk") {
        const double k = parse_real(arg);
        if (k < 1.0 || std::floor(k) != k) {
            throw ValidationError("decode topk needs an integer k >= 1, got '" + arg + "'");
        }
        return topk(static_cast<std::size_t>(k));
    }
    if (kind == "thr") {
        const double t = parse_real(arg);
        if (!(t > 0.0 && t <= 1.0)) {
            throw ValidationError("decode threshold must lie in (0, 1], got '" + arg + "'");
        }
        return thresholded(t);
    }
    throw ValidationError("unknown decode method '" + spec + "' (expected topk:K or thr:T)");
}

std::string DecodeMethod::to_string() const {
    return kind == Kind::TopK ? fmt::format("topk:{}", k) : fmt::format("thr:{}", threshold);
}

LabelSet DecodeMethod::apply(std::span<const double> probs) const {
    return kind == Kind::TopK ? decode_topk(probs, k) : decode_threshold(probs, threshold);
}

namespace {

void require_equal_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ValidationError(fmt::format("{}: {} predictions vs {} gold sets", what, a, b));
    }
}

std::size_t intersection_size(const LabelSet& a, const LabelSet& b) {
    std::size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

} // namespace

double jaccard(std::span<const LabelSet> preds, std::span<const LabelSet> golds) {
    require_equal_lengths(preds.size(), golds.size(), "jaccard");
    if (preds.empty()) {
        throw ValidationError("jaccard: no samples");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const std::size_t inter = intersection_size(preds[i], golds[i]);
        const std::size_t uni = preds[i].size() + golds[i].size() - inter;
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(preds.size());
}

F1Scores micro_macro_f1(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                        std::size_t n) {
    require_equal_lengths(preds.size(), golds.size(), "micro_macro_f1");
    F1Scores out;
    out.per_label.resize(n);
    auto check = [n](std::size_t j) {
        if (j >= n) {
            throw ValidationError(fmt::format("label index {} out of range for {} labels", j, n));
        }
    };
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (std::size_t j : preds[i]) {
            check(j);
            if (std::binary_search(golds[i].begin(), golds[i].end(), j)) {
                ++out.per_label[j].tp;
            } else {
                ++out.per_label[j].fp;
            }
        }
        for (std::size_t j : golds[i]) {
            check(j);
            if (!std::binary_search(preds[i].begin(), preds[i].end(), j)) {
                ++out.per_label[j].fn;
            }
        }
    }
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double f1_sum = 0.0;
    for (auto& s : out.per_label) {
        s.precision = ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp));
        s.recall = ratio(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fn));
        s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
        tp += static_cast<double>(s.tp);
        fp += static_cast<double>(s.fp);
        fn += static_cast<double>(s.fn);
        f1_sum += s.f1;
    }
    const double p = ratio(tp, tp + fp);
    const double r = ratio(tp, tp + fn);
    out.micro = ratio(2.0 * p * r, p + r);
    out.macro = n == 0 ? 0.0 : f1_sum / static_cast<double>(n);
    return out;
}

EvalReport evaluate(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                    const std::vector<std::string>& label_names) {
    const F1Scores f1 = micro_macro_f1(preds, golds, label_names.size());
    EvalReport r;
    r.micro_f1 = f1.micro;
    r.macro_f1 = f1.macro;
    r.jaccard = jaccard(preds, golds);
    r.samples = preds.size();
    r.label_names = label_names;
    r.per_label = f1.per_label;
    return r;
}

std::string EvalReport::to_text() const {
    std::string out;
    out += fmt::format("samples {}\n", samples);
    out += fmt::format("micro_f1 {:.6f}\n", micro_f1);
    out += fmt::format("macro_f1 {:.6f}\n", macro_f1);
    out += fmt::format("jaccard {:.6f}\n", jaccard);
    out += fmt::format("{:<20} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}\n", "label", "tp", "fp", "fn",
                       "precision", "recall", "f1");
    for (std::size_t j = 0; j < per_label.size(); ++j) {
        const auto& s = per_label[j];
        out += fmt::format("{:<20} {:>6} {:>6} {:>6} {:>9.4f} {:>9.4f} {:>9.4f}\n",
                           label_names[j], s.tp, s.fp, s.fn, s.precision, s.recall, s.f1);
    }
    return out;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t j = 0; j < per_label.size(); ++j) {
        const auto& s = per_label[j];
        labels.push_back({{"label", label_names[j]},
                          {"tp", s.tp},
                          {"fp", s.fp},
                          {"fn", s.fn},
                          {"precision", s.precision},
                          {"recall", s.recall},
                          {"f1", s.f1}});
    }
    return {{"samples", samples},
            {"micro_f1", micro_f1},
            {"macro_f1", macro_f1},
            {"jaccard", jaccard},
            {"per_label", labels}};
}

} // namespace hgcn
