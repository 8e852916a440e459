// hgcn: train, evaluate and inspect the heterogeneous-graph text classifier.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include "hgcn/classifier.hpp"
#include "hgcn/config.hpp"
#include "hgcn/dataset.hpp"
#include "hgcn/error.hpp"
#include "hgcn/explain.hpp"
#include "hgcn/synth.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <optional>

using namespace hgcn;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Flags shared by the config-driven subcommands. Unset flags leave the
// config file value alone.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> layers;
    std::optional<std::size_t> hidden;
    std::optional<std::string> decode;
    std::optional<std::string> encoder;
    bool freeze = false;
    std::optional<std::string> out;
    std::optional<std::string> checkpoint;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Run configuration (JSON)")->required();
    cmd->add_option("--seed", o.seed, "Seed for init, shuffling and sampling");
    cmd->add_option("--layers", o.layers, "Number of graph convolution layers");
    cmd->add_option("--hidden", o.hidden, "Hidden width");
    cmd->add_option("--decode", o.decode, "topk:K or thr:T (T may be a fraction like 2/11)");
    cmd->add_option("--encoder", o.encoder, "lookup or file:PATH");
    cmd->add_flag("--freeze", o.freeze, "Keep the lookup embedding table fixed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path (default OUT/model.ckpt)");
}

class ConfigErrors : public std::runtime_error {
public:
    explicit ConfigErrors(std::vector<std::string> problems)
        : std::runtime_error("invalid configuration"), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

RunConfig resolve_config(const Overrides& o) {
    std::vector<std::string> problems;
    RunConfig cfg = load_run_config(o.config, problems);
    if (o.seed) {
        cfg.apply_seed(*o.seed);
    }
    if (o.layers) {
        cfg.model.num_layers = *o.layers;
    }
    if (o.hidden) {
        cfg.model.hidden = *o.hidden;
    }
    if (o.decode) {
        try {
            cfg.training.decode = DecodeMethod::parse(*o.decode);
        } catch (const ValidationError& e) {
            problems.emplace_back(e.what());
        }
    }
    if (o.encoder) {
        cfg.encoder = *o.encoder;
    }
    if (o.freeze) {
        cfg.freeze = true;
    }
    if (o.out) {
        cfg.out_dir = *o.out;
    }
    if (o.checkpoint) {
        cfg.checkpoint = *o.checkpoint;
    }
    const auto more = cfg.problems();
    problems.insert(problems.end(), more.begin(), more.end());
    if (!problems.empty()) {
        throw ConfigErrors(std::move(problems));
    }
    return cfg;
}

std::vector<Sample> load_split(const std::filesystem::path& path, const RunConfig& cfg,
                               const char* what) {
    if (path.empty()) {
        throw ConfigErrors({fmt::format("config has no '{}' dataset", what)});
    }
    auto samples = load_dataset(path, cfg.labels);
    spdlog::info("loaded {} {} samples from {}", samples.size(), what, path.string());
    return samples;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f || !(f << text)) {
        throw IoError("cannot write '" + path.string() + "'");
    }
}

// Sample ids become file names.
std::string file_stem(std::string id) {
    for (char& c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        if (!ok) {
            c = '_';
        }
    }
    return id.empty() || id[0] == '.' ? "_" + id : id;
}

int run_train(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const auto train_set = load_split(cfg.train_path, cfg, "train");
    std::vector<Sample> dev_set;
    if (!cfg.dev_path.empty()) {
        dev_set = load_split(cfg.dev_path, cfg, "dev");
    }
    std::vector<std::vector<std::string>> docs;
    for (const auto& s : train_set) {
        docs.push_back(s.tokens);
    }
    ModelConfig mc = cfg.model;
    mc.num_labels = cfg.labels.size();
    Classifier model =
        cfg.encoder == "lookup"
            ? Classifier::with_lookup(mc, cfg.labels, Vocabulary::build(docs), cfg.max_len, cfg.freeze)
            : Classifier::with_file(mc, cfg.labels, Vocabulary::build(docs), cfg.max_len,
                                    cfg.encoder.substr(5));

    ensure_dir(cfg.out_dir);
    const auto log_path = cfg.out_dir / "train_log.txt";
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) {
        throw IoError("cannot write '" + log_path.string() + "'");
    }
    train(model, train_set, dev_set, cfg.training,
          [&](const EpochLog& e) { log << e.to_line() << '\n' << std::flush; });
    const auto ckpt = cfg.checkpoint_path();
    if (ckpt.has_parent_path()) {
        ensure_dir(ckpt.parent_path());
    }
    save_checkpoint(model, ckpt);
    fmt::print("checkpoint: {}\nlog: {}\n", ckpt.string(), log_path.string());
    return 0;
}

Classifier load_model(const RunConfig& cfg) {
    Classifier model = load_checkpoint(cfg.checkpoint_path());
    if (model.labels != cfg.labels) {
        throw ConfigErrors({"checkpoint label set differs from the config's labels"});
    }
    return model;
}

int run_eval(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const Classifier model = load_model(cfg);
    const auto test_set = load_split(cfg.test_path, cfg, "test");
    const EvalReport report = evaluate_dataset(model, test_set, cfg.training.decode);
    ensure_dir(cfg.out_dir);
    write_file(cfg.out_dir / "eval.txt", report.to_text());
    nlohmann::json j = report.to_json();
    j["decode"] = cfg.training.decode.to_string();
    j["samples"] = test_set.size();
    write_file(cfg.out_dir / "eval.json", j.dump(2) + "\n");
    fmt::print("{}", report.to_text());
    return 0;
}

int run_explain(const Overrides& o, std::size_t limit) {
    const RunConfig cfg = resolve_config(o);
    const Classifier model = load_model(cfg);
    const auto test_set = load_split(cfg.test_path, cfg, "test");
    const auto dir = cfg.out_dir / "explain";
    ensure_dir(dir);

    std::vector<AttributionMatrix> annotated;
    std::vector<GoldenAttribution> goldens;
    std::size_t written = 0;
    for (const auto& s : test_set) {
        auto attr = build_attribution(model.run(s), model.node_tokens(s), model.labels);
        if (limit == 0 || written < limit) {
            render_heatmap(attr.values, attr.tokens, attr.labels, dir / file_stem(s.id));
            ++written;
        }
        if (!s.annotations.empty()) {
            goldens.push_back(model.golden(s));
            annotated.push_back(std::move(attr));
        }
    }
    nlohmann::json summary = {{"samples", test_set.size()}, {"written", written},
                              {"annotated", annotated.size()}};
    if (!annotated.empty()) {
        const double mse = attribution_mse(annotated, goldens);
        summary["attribution_mse"] = mse;
        fmt::print("attribution MSE over {} annotated samples: {:.6g}\n", annotated.size(), mse);
    }
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    fmt::print("wrote {} attribution maps to {}\n", written, dir.string());
    return 0;
}

int run_correlate(const Overrides& o) {
    const RunConfig cfg = resolve_config(o);
    const Classifier model = load_model(cfg);
    const auto test_set = load_split(cfg.test_path, cfg, "test");
    if (test_set.empty()) {
        throw ConfigErrors({"test set is empty; nothing to correlate"});
    }
    std::vector<LabelSet> preds;
    Matrix summed(model.labels.size(), model.config.hidden);
    for (const auto& s : test_set) {
        preds.push_back(model.predict(s, cfg.training.decode).chosen);
        summed += model.run(s).label_features(model.config.num_layers);
    }
    const auto dir = cfg.out_dir / "correlate";
    ensure_dir(dir);
    render_heatmap(pearson_matrix(preds, model.labels.size()), model.labels, model.labels,
                   dir / "pearson");
    render_heatmap(label_cosine_matrix(summed), model.labels, model.labels, dir / "cosine");
    fmt::print("wrote pearson and cosine matrices to {}\n", dir.string());
    return 0;
}

struct SynthArgs {
    SynthOptions options;
    std::string out = "synth";
    std::vector<std::string> co_occur;
    std::vector<std::string> exclusive;
};

std::pair<std::size_t, std::size_t> parse_pair(const std::string& text) {
    const auto colon = text.find(':');
    try {
        if (colon != std::string::npos) {
            std::size_t used_a = 0;
            std::size_t used_b = 0;
            const std::string a = text.substr(0, colon);
            const std::string b = text.substr(colon + 1);
            const auto x = std::stoul(a, &used_a);
            const auto y = std::stoul(b, &used_b);
            if (used_a == a.size() && used_b == b.size()) {
                return {x, y};
            }
        }
    } catch (const std::exception&) {
    }
    throw ValidationError(fmt::format("label pair '{}' is not of the form I:J", text));
}

int run_synth(SynthArgs args) {
    for (const auto& p : args.co_occur) {
        args.options.co_occur.push_back(parse_pair(p));
    }
    for (const auto& p : args.exclusive) {
        args.options.exclusive.push_back(parse_pair(p));
    }
    const SynthCorpus corpus = generate_synthetic_corpus(args.options);
    write_synthetic_corpus(corpus, args.out);
    fmt::print("wrote {} / {} / {} samples to {}\n", corpus.train.size(), corpus.dev.size(),
               corpus.test.size(), args.out);
    return 0;
}

void configure_logging() {
    const char* env = std::getenv("HGCN_LOG_LEVEL");
    if (env == nullptr || *env == '\0') {
        spdlog::set_level(spdlog::level::info);
        return;
    }
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only accept that when asked for.
    if (level == spdlog::level::off && std::string_view(env) != "off") {
        spdlog::set_level(spdlog::level::info);
        spdlog::warn("unknown HGCN_LOG_LEVEL '{}', using info", env);
        return;
    }
    spdlog::set_level(level);
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app("Heterogeneous graph convolution for multi-label text classification");
    app.require_subcommand(1);

    Overrides train_o;
    Overrides eval_o;
    Overrides explain_o;
    Overrides correlate_o;
    std::size_t explain_limit = 0;
    SynthArgs synth;

    add_common(app.add_subcommand("train", "Train a model and write a checkpoint"), train_o);
    add_common(app.add_subcommand("eval", "Evaluate a checkpoint on the test split"), eval_o);
    auto* explain = app.add_subcommand("explain", "Write per-sample token-label attribution maps");
    add_common(explain, explain_o);
    explain->add_option("--limit", explain_limit, "Write at most N maps (0 = all)");
    add_common(app.add_subcommand("correlate", "Label correlation and similarity heatmaps"),
               correlate_o);

    auto* synth_cmd = app.add_subcommand("synth", "Generate a trigger-word corpus");
    synth_cmd->add_option("--out", synth.out, "Output directory");
    synth_cmd->add_option("--seed", synth.options.seed, "Generator seed");
    synth_cmd->add_option("--labels", synth.options.n_labels, "Number of labels");
    synth_cmd->add_option("--vocab", synth.options.vocab_size, "Distinct content tokens");
    synth_cmd->add_option("--train", synth.options.train, "Training samples");
    synth_cmd->add_option("--dev", synth.options.dev, "Development samples");
    synth_cmd->add_option("--test", synth.options.test, "Test samples");
    synth_cmd->add_option("--min-labels", synth.options.min_labels, "Fewest labels per sample");
    synth_cmd->add_option("--max-labels", synth.options.max_labels, "Most labels per sample");
    synth_cmd->add_option("--co-occur", synth.co_occur, "I:J label indices that always appear together");
    synth_cmd->add_option("--exclusive", synth.exclusive, "I:J label indices that never appear together");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (app.got_subcommand("train")) {
            return run_train(train_o);
        }
        if (app.got_subcommand("eval")) {
            return run_eval(eval_o);
        }
        if (app.got_subcommand("explain")) {
            return run_explain(explain_o, explain_limit);
        }
        if (app.got_subcommand("correlate")) {
            return run_correlate(correlate_o);
        }
        return run_synth(synth);
    } catch (const ConfigErrors& e) {
        fmt::print(stderr, "error: {} ({} problem{})\n", e.what(), e.problems().size(),
                   e.problems().size() == 1 ? "" : "s");
        for (const auto& p : e.problems()) {
            fmt::print(stderr, "  - {}\n", p);
        }
        return kExitValidation;
    } catch (const ValidationError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const DimensionError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitRuntime;
    }
}
