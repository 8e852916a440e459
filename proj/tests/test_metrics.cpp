#include "hgcn/error.hpp"
#include "hgcn/metrics.hpp"
#include "hgcn/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace hgcn;

namespace {

std::vector<double> random_probs(Rng& rng, std::size_t n, bool with_ties) {
    std::vector<double> p(n);
    for (auto& v : p) {
        // Coarse grid makes ties common when requested.
        v = with_ties ? static_cast<double>(1 + rng.below(5)) : rng.uniform(0.01, 1.0);
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) {
        v /= total;
    }
    return p;
}

// Reference: repeatedly take the first strictly largest remaining entry.
LabelSet brute_topk(const std::vector<double>& p, std::size_t k) {
    std::vector<bool> used(p.size(), false);
    LabelSet out;
    for (std::size_t round = 0; round < std::min(k, p.size()); ++round) {
        std::size_t best = p.size();
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!used[j] && (best == p.size() || p[j] > p[best])) {
                best = j;
            }
        }
        used[best] = true;
        out.push_back(best);
    }
    std::sort(out.begin(), out.end());
    return out;
}

LabelSet brute_threshold(const std::vector<double>& p, double t) {
    LabelSet out;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] >= t) {
            out.push_back(j);
        }
    }
    return out;
}

} // namespace

TEST(ScoreLabels, Examples) {
    EXPECT_EQ(score_labels(Matrix::zeros(3, 2)), (std::vector<double>{0, 0}));
    const auto s = score_labels(Matrix{{0.2, 0.8}, {0.4, 0.1}});
    EXPECT_NEAR(s[0], 0.6, 1e-15);
    EXPECT_NEAR(s[1], 0.9, 1e-15);
    EXPECT_EQ(score_labels(Matrix{{0.3, 0.7, 0.1}}), (std::vector<double>{0.3, 0.7, 0.1}));
}

TEST(ScoreLabels, MatchesDoubleLoop) {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        Matrix a(1 + rng.below(10), 1 + rng.below(6));
        for (auto& v : a.data()) {
            v = rng.uniform();
        }
        const auto s = score_labels(a);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            double ref = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) {
                ref += a(i, j);
            }
            EXPECT_NEAR(s[j], ref, 1e-12);
        }
    }
}

TEST(DecodeTopK, Examples) {
    const std::vector<double> p{0.5, 0.3, 0.2};
    EXPECT_EQ(decode_topk(p, 2), (LabelSet{0, 1}));
    EXPECT_EQ(decode_topk(p, 3), (LabelSet{0, 1, 2}));
    EXPECT_EQ(decode_topk(p, 7), (LabelSet{0, 1, 2}));
    const std::vector<double> tie{0.4, 0.4, 0.2};
    EXPECT_EQ(decode_topk(tie, 1), (LabelSet{0}));
    EXPECT_THROW(decode_topk(p, 0), ValidationError);
}

TEST(DecodeThreshold, Examples) {
    const std::vector<double> uniform(11, 1.0 / 11.0);
    EXPECT_TRUE(decode_threshold(uniform, 2.0 / 11.0).empty());
    const std::vector<double> p{0.5, 0.3, 0.2};
    EXPECT_EQ(decode_threshold(p, std::nextafter(0.2, 0.0)), (LabelSet{0, 1, 2}));
    EXPECT_EQ(decode_threshold(p, 0.3), (LabelSet{0, 1}));
    EXPECT_THROW(decode_threshold(p, 0.0), ValidationError);
    EXPECT_THROW(decode_threshold(p, 1.5), ValidationError);
    EXPECT_NO_THROW(decode_threshold(p, 1.0));
}

TEST(Decode, MatchesBruteForceOnRandomVectors) {
    Rng rng(2);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.below(20);
        const auto p = random_probs(rng, n, t % 3 == 0);
        const std::size_t k = 1 + rng.below(n + 2);
        const LabelSet top = decode_topk(p, k);
        EXPECT_EQ(top, brute_topk(p, k));
        EXPECT_EQ(top.size(), std::min(k, n));

        const double t1 = rng.uniform(1e-6, 1.0);
        const double t2 = rng.uniform(1e-6, 1.0);
        const double lo = std::min(t1, t2);
        const double hi = std::max(t1, t2);
        const LabelSet at_lo = decode_threshold(p, lo);
        const LabelSet at_hi = decode_threshold(p, hi);
        EXPECT_EQ(at_lo, brute_threshold(p, lo));
        EXPECT_EQ(at_hi, brute_threshold(p, hi));
        EXPECT_TRUE(std::includes(at_lo.begin(), at_lo.end(), at_hi.begin(), at_hi.end()));
    }
}

TEST(DecodeMethod, ParseAndFormat) {
    const auto k = DecodeMethod::parse("topk:2");
    EXPECT_EQ(k.kind, DecodeMethod::Kind::TopK);
    EXPECT_EQ(k.k, 2u);
    const auto t = DecodeMethod::parse("thr:2/11");
    EXPECT_EQ(t.kind, DecodeMethod::Kind::Threshold);
    EXPECT_DOUBLE_EQ(t.threshold, 2.0 / 11.0);
    EXPECT_DOUBLE_EQ(DecodeMethod::parse("thr:0.25").threshold, 0.25);
    EXPECT_EQ(DecodeMethod::parse(k.to_string()).k, 2u);
    EXPECT_DOUBLE_EQ(DecodeMethod::parse(t.to_string()).threshold, t.threshold);
    for (const char* bad : {"topk:0", "topk:x", "thr:0", "thr:1.5", "thr:1/0", "beam:3", "thr:"}) {
        EXPECT_THROW(DecodeMethod::parse(bad), ValidationError) << bad;
    }
}

TEST(DecodeMethod, TopKAndThresholdDisagreeOnCraftedProbs) {
    // One dominant label: threshold 2/11 keeps one, top-2 always keeps two.
    const std::vector<double> p{0.82, 0.05, 0.04, 0.03, 0.02, 0.01, 0.01, 0.01, 0.005, 0.003,
                                0.002};
    const auto by_k = DecodeMethod::parse("topk:2").apply(p);
    const auto by_t = DecodeMethod::parse("thr:2/11").apply(p);
    EXPECT_EQ(by_k.size(), 2u);
    EXPECT_EQ(by_t.size(), 1u);
}

TEST(Jaccard, Examples) {
    const std::vector<LabelSet> same{{0, 1}, {2}};
    EXPECT_DOUBLE_EQ(jaccard(same, same), 1.0);
    const std::vector<LabelSet> y{{0, 1}};
    const std::vector<LabelSet> yhat{{1, 2}};
    EXPECT_NEAR(jaccard(yhat, y), 1.0 / 3.0, 1e-12);
    const std::vector<LabelSet> d1{{0}};
    const std::vector<LabelSet> d2{{1}};
    EXPECT_EQ(jaccard(d1, d2), 0.0);
    const std::vector<LabelSet> empty{{}};
    EXPECT_EQ(jaccard(empty, empty), 1.0);
    EXPECT_THROW(jaccard(same, y), ValidationError);
    EXPECT_THROW(jaccard(std::vector<LabelSet>{}, std::vector<LabelSet>{}), ValidationError);
}

TEST(Jaccard, MixedSamplesAverage) {
    const std::vector<LabelSet> golds{{0, 1}, {2}, {}, {0}};
    const std::vector<LabelSet> preds{{1, 2}, {2}, {}, {1}};
    EXPECT_NEAR(jaccard(preds, golds), (1.0 / 3.0 + 1.0 + 1.0 + 0.0) / 4.0, 1e-12);
}

TEST(F1, Examples) {
    const std::vector<LabelSet> perfect{{0, 2}, {1}};
    const auto f = micro_macro_f1(perfect, perfect, 3);
    EXPECT_DOUBLE_EQ(f.micro, 1.0);
    EXPECT_DOUBLE_EQ(f.macro, 1.0);

    // One label, TP=1, FP=1, FN=0.
    const std::vector<LabelSet> preds{{0}, {0}};
    const std::vector<LabelSet> golds{{0}, {}};
    const auto g = micro_macro_f1(preds, golds, 1);
    EXPECT_NEAR(g.per_label[0].precision, 0.5, 1e-12);
    EXPECT_NEAR(g.per_label[0].recall, 1.0, 1e-12);
    EXPECT_NEAR(g.per_label[0].f1, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(g.micro, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(g.macro, 2.0 / 3.0, 1e-12);

    // Label 2 never appears: F1 0, still averaged.
    const std::vector<LabelSet> p2{{0}, {1}};
    const auto h = micro_macro_f1(p2, p2, 3);
    EXPECT_EQ(h.per_label[2].f1, 0.0);
    EXPECT_NEAR(h.macro, 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(h.micro, 1.0);
}

TEST(F1, HandComputedMixedCase) {
    // label0: tp1 fp1 fn1 -> f1 1/2; label1: tp1 fp0 fn1 -> p1 r1/2 f1 2/3; label2: tp0 fp1 fn0 -> 0
    const std::vector<LabelSet> golds{{0, 1}, {0}, {1}};
    const std::vector<LabelSet> preds{{0, 1}, {2}, {0}};
    const auto f = micro_macro_f1(preds, golds, 3);
    EXPECT_EQ(f.per_label[0].tp, 1u);
    EXPECT_EQ(f.per_label[0].fp, 1u);
    EXPECT_EQ(f.per_label[0].fn, 1u);
    EXPECT_NEAR(f.per_label[1].f1, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(f.macro, (0.5 + 2.0 / 3.0 + 0.0) / 3.0, 1e-12);
    // pooled tp2 fp2 fn2
    EXPECT_NEAR(f.micro, 0.5, 1e-12);
}

TEST(F1, MicroEqualsMacroForOneLabelAndRange) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.below(5);
        std::vector<LabelSet> preds(1 + rng.below(10));
        std::vector<LabelSet> golds(preds.size());
        for (std::size_t s = 0; s < preds.size(); ++s) {
            for (std::size_t j = 0; j < n; ++j) {
                if (rng.below(2) == 1) {
                    preds[s].push_back(j);
                }
                if (rng.below(2) == 1) {
                    golds[s].push_back(j);
                }
            }
        }
        const auto f = micro_macro_f1(preds, golds, n);
        if (n == 1) {
            EXPECT_DOUBLE_EQ(f.micro, f.macro);
        }
        for (double v : {f.micro, f.macro, jaccard(preds, golds)}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_DOUBLE_EQ(micro_macro_f1(preds, preds, n).micro,
                         preds == std::vector<LabelSet>(preds.size()) ? 0.0 : 1.0);
    }
}

TEST(F1, RejectsBadInput) {
    const std::vector<LabelSet> a{{0}};
    const std::vector<LabelSet> b{{0}, {1}};
    EXPECT_THROW(micro_macro_f1(a, b, 2), ValidationError);
    const std::vector<LabelSet> out_of_range{{5}};
    EXPECT_THROW(micro_macro_f1(out_of_range, a, 2), ValidationError);
}

TEST(EvalReport, TextAndJson) {
    const std::vector<LabelSet> golds{{0, 1}, {0}, {1}};
    const std::vector<LabelSet> preds{{0, 1}, {2}, {0}};
    const EvalReport r = evaluate(preds, golds, {"joy", "fear", "anger"});
    EXPECT_EQ(r.samples, 3u);
    const std::string text = r.to_text();
    EXPECT_NE(text.find("micro_f1 0.5"), std::string::npos);
    EXPECT_NE(text.find("jaccard "), std::string::npos);
    EXPECT_NE(text.find("fear"), std::string::npos);
    const auto j = r.to_json();
    EXPECT_DOUBLE_EQ(j.at("micro_f1").get<double>(), 0.5);
    EXPECT_EQ(j.at("per_label").size(), 3u);
    EXPECT_THROW(evaluate(preds, golds, {"a", "b"}), ValidationError);
}
