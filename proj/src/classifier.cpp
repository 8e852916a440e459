#include "hgcn/classifier.hpp"

#include "hgcn/archive.hpp"
#include "hgcn/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

namespace hgcn {

Classifier Classifier::with_lookup(ModelConfig config, std::vector<std::string> labels,
                                   Vocabulary vocab, std::size_t max_len, bool freeze_encoder) {
    config.num_labels = labels.size();
    config.validate();
    Rng rng(config.seed);
    Classifier c;
    c.encoder = std::make_shared<TrainableLookup>(vocab.size(), config.input_width, rng,
                                                  freeze_encoder);
    c.params = ModelParams::init(config, rng);
    c.config = config;
    c.labels = std::move(labels);
    c.vocab = std::move(vocab);
    c.max_len = max_len;
    return c;
}

Classifier Classifier::with_file(ModelConfig config, std::vector<std::string> labels,
                                 Vocabulary vocab, std::size_t max_len,
                                 const std::filesystem::path& vectors) {
    auto encoder = std::make_shared<PrecomputedFile>(vectors);
    config.num_labels = labels.size();
    config.input_width = encoder->width();
    config.validate();
    Rng rng(config.seed);
    Classifier c;
    c.encoder = std::move(encoder);
    c.params = ModelParams::init(config, rng);
    c.config = config;
    c.labels = std::move(labels);
    c.vocab = std::move(vocab);
    c.max_len = max_len;
    return c;
}

LabelSet Classifier::gold_labels(const Sample& sample) const {
    LabelSet out;
    for (const auto& name : sample.labels) {
        const auto it = std::find(labels.begin(), labels.end(), name);
        if (it == labels.end()) {
            throw ValidationError("sample '" + sample.id + "' has unknown label '" + name + "'");
        }
        out.push_back(static_cast<std::size_t>(it - labels.begin()));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

EncodedSample Classifier::encode(const Sample& sample) const {
    return {sample.id, tokenize(sample.tokens, vocab, max_len), gold_labels(sample)};
}

std::vector<std::string> Classifier::node_tokens(const Sample& sample) const {
    const std::size_t content = std::min(sample.tokens.size(), max_len - 2);
    std::vector<std::string> out;
    out.push_back(vocab.token(Vocabulary::kSeqStart));
    out.insert(out.end(), sample.tokens.begin(),
               sample.tokens.begin() + static_cast<long>(content));
    out.push_back(vocab.token(Vocabulary::kSeqEnd));
    return out;
}

ForwardTrace Classifier::run(const Sample& sample) const {
    return forward(encode(sample), *encoder, params, config);
}

Prediction Classifier::predict(const Sample& sample, const DecodeMethod& decode) const {
    Prediction p;
    p.probs = run(sample).probabilities();
    p.chosen = decode.apply(p.probs);
    return p;
}

std::vector<Prediction> Classifier::predict_all(std::span<const Sample> samples,
                                                const DecodeMethod& decode) const {
    std::vector<Prediction> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(predict(s, decode));
    }
    return out;
}

GoldenAttribution Classifier::golden(const Sample& sample) const {
    const std::size_t content = std::min(sample.tokens.size(), max_len - 2);
    std::vector<KeywordCell> cells;
    for (const auto& a : sample.annotations) {
        if (a.token_index >= content) {
            continue;
        }
        const auto it = std::find(labels.begin(), labels.end(), a.label);
        if (it == labels.end()) {
            throw ValidationError("annotation in sample '" + sample.id + "' names unknown label '" +
                                  a.label + "'");
        }
        // Row 0 is the SEQ_START node.
        cells.push_back({a.token_index + 1, static_cast<std::size_t>(it - labels.begin()),
                         a.intensity});
    }
    return build_golden(content + 2, labels.size(), cells);
}

std::vector<NodePtr> Classifier::trainable() const {
    auto all = params.all();
    for (auto& p : encoder->parameters()) {
        all.push_back(std::move(p));
    }
    return all;
}

std::string EpochLog::to_line() const {
    std::string line = fmt::format("epoch {} loss {:.10f}", epoch, mean_loss);
    if (dev) {
        line += fmt::format(" dev_micro_f1 {:.6f} dev_macro_f1 {:.6f} dev_jaccard {:.6f}",
                            dev->micro_f1, dev->macro_f1, dev->jaccard);
    }
    return line;
}

std::vector<EpochLog> train(Classifier& model, std::span<const Sample> train_set,
                            std::span<const Sample> dev_set, const TrainOptions& options,
                            const std::function<void(const EpochLog&)>& on_epoch) {
    if (train_set.empty()) {
        throw ValidationError("training set is empty");
    }
    if (options.batch_size == 0) {
        throw ValidationError("batch_size must be >= 1");
    }
    std::vector<EncodedSample> encoded;
    encoded.reserve(train_set.size());
    for (const auto& s : train_set) {
        encoded.push_back(model.encode(s));
    }
    Optimizer optimizer(options.optimizer, options.lr);
    const Rng base(options.seed);
    std::vector<std::size_t> order(encoded.size());
    std::vector<EpochLog> logs;
    std::vector<EncodedSample> batch;
    for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffler = base.derive(epoch);
        shuffler.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(encoded[order[i]]);
            }
            const double loss = accumulate_gradients(batch, *model.encoder, model.params,
                                                     model.config);
            optimizer.step(model.trainable());
            loss_sum += loss * static_cast<double>(batch.size());
        }
        EpochLog log{epoch, loss_sum / static_cast<double>(order.size()), std::nullopt};
        if (!dev_set.empty()) {
            log.dev = evaluate_dataset(model, dev_set, options.decode);
        }
        spdlog::info("{}", log.to_line());
        if (on_epoch) {
            on_epoch(log);
        }
        logs.push_back(log);
        if (options.early_stop_jaccard > 0.0 && log.dev &&
            log.dev->jaccard >= options.early_stop_jaccard) {
            break;
        }
    }
    return logs;
}

EvalReport evaluate_dataset(const Classifier& model, std::span<const Sample> samples,
                            const DecodeMethod& decode) {
    std::vector<LabelSet> preds;
    std::vector<LabelSet> golds;
    for (const auto& s : samples) {
        preds.push_back(model.predict(s, decode).chosen);
        golds.push_back(model.gold_labels(s));
    }
    return evaluate(preds, golds, model.labels);
}

void save_checkpoint(const Classifier& model, const std::filesystem::path& path) {
    TensorArchive archive;
    nlohmann::json cfg = model.config;
    archive.meta = {{"kind", "checkpoint"},
                    {"format_version", kCheckpointVersion},
                    {"config", cfg},
                    {"max_len", model.max_len},
                    {"encoder", model.encoder->describe()},
                    {"labels", model.labels},
                    {"vocab", model.vocab.tokens()}};
    const auto names = model.params.names();
    const auto values = model.params.all();
    for (std::size_t i = 0; i < names.size(); ++i) {
        archive.add(names[i], values[i]->value);
    }
    if (const auto* lookup = dynamic_cast<const TrainableLookup*>(model.encoder.get())) {
        archive.meta["frozen"] = lookup->frozen();
        archive.add("embedding", lookup->table());
    }
    write_archive(path, archive);
}

Classifier load_checkpoint(const std::filesystem::path& path) {
    const TensorArchive archive = read_archive(path);
    const std::string where = "checkpoint '" + path.string() + "': ";
    if (archive.meta.value("kind", std::string()) != "checkpoint") {
        throw IoError(where + "not a checkpoint archive");
    }
    const int version = archive.meta.value("format_version", -1);
    if (version != kCheckpointVersion) {
        throw IoError(where + fmt::format("format version {} unsupported (expected {})", version,
                                          kCheckpointVersion));
    }
    Classifier c;
    try {
        c.config = archive.meta.at("config").get<ModelConfig>();
        c.max_len = archive.meta.at("max_len").get<std::size_t>();
        c.labels = archive.meta.at("labels").get<std::vector<std::string>>();
        c.vocab = Vocabulary::from_tokens(archive.meta.at("vocab").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError(where + "malformed header: " + e.what());
    } catch (const ValidationError& e) {
        throw IoError(where + e.what());
    }
    try {
        c.config.validate();
    } catch (const ValidationError& e) {
        throw IoError(where + e.what());
    }
    if (c.labels.size() != c.config.num_labels) {
        throw IoError(where + "label list does not match num_labels");
    }

    auto load = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        const Matrix& m = archive.require(name);
        if (m.rows() != rows || m.cols() != cols) {
            throw IoError(where + fmt::format("tensor '{}' is {}, expected {}x{}", name,
                                              m.shape_string(), rows, cols));
        }
        return make_parameter(m);
    };
    const ModelConfig& cfg = c.config;
    c.params.w_token_in = load("w_token_in", cfg.input_width, cfg.hidden);
    c.params.w_label_in = load("w_label_in", cfg.num_labels, cfg.hidden);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        c.params.w_layer.push_back(load("w_layer." + std::to_string(l), cfg.hidden, cfg.hidden));
    }

    const std::string encoder = archive.meta.value("encoder", std::string("lookup"));
    if (encoder == "lookup") {
        const Matrix& table = archive.require("embedding");
        if (table.rows() != c.vocab.size() || table.cols() != cfg.input_width) {
            throw IoError(where + fmt::format("tensor 'embedding' is {}, expected {}x{}",
                                              table.shape_string(), c.vocab.size(),
                                              cfg.input_width));
        }
        c.encoder = std::make_shared<TrainableLookup>(table, archive.meta.value("frozen", false));
    } else if (encoder.rfind("file:", 0) == 0) {
        c.encoder = std::make_shared<PrecomputedFile>(encoder.substr(5));
        if (c.encoder->width() != cfg.input_width) {
            throw IoError(where + "precomputed vectors do not match the saved input width");
        }
    } else {
        throw IoError(where + "unknown encoder '" + encoder + "'");
    }
    return c;
}

} // namespace hgcn
