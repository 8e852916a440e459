#ifndef HGCN_CLASSIFIER_HPP
#define HGCN_CLASSIFIER_HPP

#include "hgcn/dataset.hpp"
#include "hgcn/encoder.hpp"
#include "hgcn/explain.hpp"
#include "hgcn/metrics.hpp"
#include "hgcn/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hgcn {

/// Model, encoder, vocabulary and label set bundled for end-to-end use.
/// This is the unit that checkpoints persist.
struct Classifier {
    ModelConfig config;
    std::vector<std::string> labels;
    Vocabulary vocab;
    std::size_t max_len = 32;
    std::shared_ptr<EmbeddingProvider> encoder;
    ModelParams params;

    /// Lookup-encoder classifier with seeded embedding table and weights.
    /// `config.input_width` is the embedding width.
    static Classifier with_lookup(ModelConfig config, std::vector<std::string> labels,
                                  Vocabulary vocab, std::size_t max_len, bool freeze_encoder);
    /// Classifier fed by a precomputed-vector file; the file fixes input_width.
    static Classifier with_file(ModelConfig config, std::vector<std::string> labels,
                                Vocabulary vocab, std::size_t max_len,
                                const std::filesystem::path& vectors);

    EncodedSample encode(const Sample& sample) const;
    /// Token-node names for one sample, including the sequence markers.
    std::vector<std::string> node_tokens(const Sample& sample) const;
    ForwardTrace run(const Sample& sample) const;
    Prediction predict(const Sample& sample, const DecodeMethod& decode) const;
    std::vector<Prediction> predict_all(std::span<const Sample> samples,
                                        const DecodeMethod& decode) const;
    LabelSet gold_labels(const Sample& sample) const;
    /// Keyword annotations mapped onto token-node rows; cells for truncated
    /// tokens are dropped.
    GoldenAttribution golden(const Sample& sample) const;
    /// All trainable matrices: model weights then encoder parameters.
    std::vector<NodePtr> trainable() const;
};

struct TrainOptions {
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double lr = 0.01;
    DecodeMethod decode = DecodeMethod::thresholded(0.2);
    std::uint64_t seed = 42;
    /// Stop once the dev Jaccard reaches this value (0 disables).
    double early_stop_jaccard = 0.0;
};

struct EpochLog {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    std::optional<EvalReport> dev;

    /// Fixed-format line; byte-identical across runs with equal inputs.
    std::string to_line() const;
};

/// Mini-batch training with a per-epoch shuffle derived from (seed, epoch).
std::vector<EpochLog> train(Classifier& model, std::span<const Sample> train_set,
                            std::span<const Sample> dev_set, const TrainOptions& options,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

EvalReport evaluate_dataset(const Classifier& model, std::span<const Sample> samples,
                            const DecodeMethod& decode);

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Classifier& model, const std::filesystem::path& path);
/// Throws IoError on corrupt files, version mismatch or missing tensors.
Classifier load_checkpoint(const std::filesystem::path& path);

} // namespace hgcn

#endif // HGCN_CLASSIFIER_HPP
