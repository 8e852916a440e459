#include "hgcn/synth.hpp"

#include "hgcn/error.hpp"
#include "hgcn/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace hgcn {

namespace {

constexpr int kMaxLabelDraws = 10000;

void validate_vocabulary(const SynthOptions& o, const std::vector<std::vector<std::string>>& triggers,
                         const std::vector<std::string>& fillers) {
    std::set<std::string> seen;
    for (std::size_t j = 0; j < triggers.size(); ++j) {
        if (triggers[j].empty()) {
            throw ValidationError(fmt::format("label {} has no trigger token", j));
        }
        for (const auto& t : triggers[j]) {
            if (!seen.insert(t).second) {
                throw ValidationError(fmt::format("trigger '{}' is not exclusive to one label", t));
            }
        }
    }
    for (const auto& f : fillers) {
        if (seen.count(f) != 0) {
            throw ValidationError(fmt::format("trigger/filler overlap on token '{}'", f));
        }
    }
    if (o.min_labels < 1 || o.min_labels > o.max_labels || o.max_labels > o.n_labels) {
        throw ValidationError(fmt::format("label count range [{}, {}] invalid for {} labels",
                                          o.min_labels, o.max_labels, o.n_labels));
    }
    if (o.min_filler > o.max_filler) {
        throw ValidationError("min_filler exceeds max_filler");
    }
    for (const auto& [a, b] : o.co_occur) {
        if (a >= o.n_labels || b >= o.n_labels || a == b) {
            throw ValidationError(fmt::format("bad co-occurrence pair ({}, {})", a, b));
        }
    }
    for (const auto& [a, b] : o.exclusive) {
        if (a >= o.n_labels || b >= o.n_labels || a == b) {
            throw ValidationError(fmt::format("bad exclusion pair ({}, {})", a, b));
        }
    }
}

bool satisfies(const SynthOptions& o, const std::vector<std::size_t>& set) {
    auto has = [&](std::size_t j) { return std::find(set.begin(), set.end(), j) != set.end(); };
    for (const auto& [a, b] : o.co_occur) {
        if (has(a) != has(b)) {
            return false;
        }
    }
    for (const auto& [a, b] : o.exclusive) {
        if (has(a) && has(b)) {
            return false;
        }
    }
    return true;
}

std::vector<std::size_t> draw_labels(const SynthOptions& o, Rng& rng) {
    std::vector<std::size_t> pool(o.n_labels);
    for (int attempt = 0; attempt < kMaxLabelDraws; ++attempt) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        const std::size_t k = o.min_labels + rng.below(o.max_labels - o.min_labels + 1);
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        }
        std::vector<std::size_t> set(pool.begin(), pool.begin() + static_cast<long>(k));
        std::sort(set.begin(), set.end());
        if (satisfies(o, set)) {
            return set;
        }
    }
    throw ValidationError("label-set constraints cannot be satisfied with the given label counts");
}

Sample make_sample(const SynthOptions& o, const SynthCorpus& c, const std::string& id, Rng& rng) {
    Sample s;
    s.id = id;
    const auto label_idx = draw_labels(o, rng);
    const std::size_t filler_count = o.min_filler + rng.below(o.max_filler - o.min_filler + 1);
    for (std::size_t i = 0; i < filler_count; ++i) {
        s.tokens.push_back(c.fillers[rng.below(c.fillers.size())]);
    }
    std::vector<std::string> planted;
    for (std::size_t j : label_idx) {
        const auto& options = c.triggers[j];
        const std::string& trig = options[rng.below(options.size())];
        const std::size_t pos = rng.below(s.tokens.size() + 1);
        s.tokens.insert(s.tokens.begin() + static_cast<long>(pos), trig);
        planted.push_back(trig);
        s.labels.push_back(c.labels[j]);
    }
    for (std::size_t k = 0; k < label_idx.size(); ++k) {
        const auto it = std::find(s.tokens.begin(), s.tokens.end(), planted[k]);
        s.annotations.push_back(
            {static_cast<std::size_t>(it - s.tokens.begin()), c.labels[label_idx[k]], 1.0});
    }
    return s;
}

} // namespace

SynthCorpus generate_synthetic_corpus(const SynthOptions& o) {
    if (o.n_labels == 0) {
        throw ValidationError("synthetic corpus needs at least one label");
    }
    SynthCorpus c;
    for (std::size_t j = 0; j < o.n_labels; ++j) {
        c.labels.push_back(fmt::format("L{}", j + 1));
    }
    if (o.trigger_map.empty()) {
        for (std::size_t j = 0; j < o.n_labels; ++j) {
            c.triggers.push_back({fmt::format("trig{}", j + 1)});
        }
    } else {
        if (o.trigger_map.size() != o.n_labels) {
            throw ValidationError(fmt::format("trigger map covers {} labels, expected {}",
                                              o.trigger_map.size(), o.n_labels));
        }
        c.triggers = o.trigger_map;
    }
    std::size_t trigger_count = 0;
    for (const auto& t : c.triggers) {
        trigger_count += t.size();
    }
    if (o.vocab_size <= trigger_count) {
        throw ValidationError(fmt::format("vocab_size {} leaves no room for filler tokens after "
                                          "{} triggers",
                                          o.vocab_size, trigger_count));
    }
    for (std::size_t i = 0; i < o.vocab_size - trigger_count; ++i) {
        c.fillers.push_back(fmt::format("w{:03}", i));
    }
    validate_vocabulary(o, c.triggers, c.fillers);

    Rng rng(o.seed);
    auto fill = [&](std::vector<Sample>& out, std::size_t count, const char* split) {
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(make_sample(o, c, fmt::format("{}-{:04}", split, i), rng));
        }
    };
    fill(c.train, o.train, "train");
    fill(c.dev, o.dev, "dev");
    fill(c.test, o.test, "test");
    return c;
}

void write_synthetic_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    }
    write_dataset(dir / "train.jsonl", corpus.train);
    write_dataset(dir / "dev.jsonl", corpus.dev);
    write_dataset(dir / "test.jsonl", corpus.test);
    nlohmann::json triggers = nlohmann::json::object();
    for (std::size_t j = 0; j < corpus.labels.size(); ++j) {
        triggers[corpus.labels[j]] = corpus.triggers[j];
    }
    const nlohmann::json cfg = {{"labels", corpus.labels},
                                {"train", "train.jsonl"},
                                {"dev", "dev.jsonl"},
                                {"test", "test.jsonl"},
                                {"triggers", triggers}};
    std::ofstream f(dir / "config.json", std::ios::trunc);
    if (!f) {
        throw IoError("cannot write '" + (dir / "config.json").string() + "'");
    }
    f << cfg.dump(2) << '\n';
}

} // namespace hgcn
