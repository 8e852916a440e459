#ifndef HGCN_MODEL_HPP
#define HGCN_MODEL_HPP

#include "hgcn/autodiff.hpp"
#include "hgcn/encoder.hpp"
#include "hgcn/optim.hpp"
#include "hgcn/rng.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hgcn {

struct ModelConfig {
    std::size_t num_layers = 2;
    std::size_t hidden = 64;
    std::size_t num_labels = 0;
    /// Width d of the encoder output.
    std::size_t input_width = 64;
    Activation activation = Activation::Relu;
    /// Stop gradients through the intermediate edge reconstructions. The
    /// final reconstruction always carries gradient since the scores read it.
    bool detach_edges = false;
    /// The +I of the normalizer. Off only for ablations.
    bool add_self_loops = true;
    std::uint64_t seed = 42;

    /// Throws ValidationError listing every violated constraint.
    void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);
std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Learned matrices: per-type input projections and one W per layer.
struct ModelParams {
    NodePtr w_token_in;         // input_width x hidden
    NodePtr w_label_in;         // num_labels x hidden
    std::vector<NodePtr> w_layer; // hidden x hidden, one per layer

    /// Seeded uniform(-s, s), s = sqrt(6 / (fan_in + fan_out)).
    static ModelParams init(const ModelConfig& cfg, Rng& rng);
    std::vector<NodePtr> all() const;
    /// Deep copy with fresh gradient buffers.
    ModelParams clone() const;
    /// Stable names used in checkpoints, aligned with all().
    std::vector<std::string> names() const;
};

/// A tokenized sample ready for the graph: ids include SEQ_START/SEQ_END.
struct EncodedSample {
    std::string id;
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> labels; // sorted label indices
};

/// Everything computed by one forward pass, kept alive with its tape.
struct ForwardTrace {
    Tape tape;
    std::size_t token_count = 0;
    std::size_t label_count = 0;
    /// H^(0) .. H^(L); token rows first, then label rows.
    std::vector<NodePtr> features;
    /// Entry l-1 is the token-label block used by layer l (entry 0 is the
    /// initial zero block); entry L is the reconstruction after the last layer.
    std::vector<NodePtr> token_label;
    NodePtr scores;
    NodePtr probs;

    const Matrix& final_token_label() const { return token_label.back()->value; }
    Matrix token_features(std::size_t layer) const;
    Matrix label_features(std::size_t layer) const;
    std::vector<double> probabilities() const;
};

/// One-hot label inputs: the n x n identity.
Matrix init_label_features(std::size_t n);

ForwardTrace forward(const EncodedSample& sample, const EmbeddingProvider& encoder,
                     const ModelParams& params, const ModelConfig& cfg);

/// Uniform distribution over the positives; uniform over all labels when
/// there are none.
Matrix build_target(std::span<const int> binary);
Matrix build_target(std::span<const std::size_t> positives, std::size_t n);

enum class OptimizerKind : std::uint8_t { Sgd, Adam };

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr);
    void step(std::span<const NodePtr> params);
    OptimizerKind kind() const noexcept { return kind_; }
    double lr() const noexcept { return lr_; }

private:
    OptimizerKind kind_;
    double lr_;
    std::optional<Adam> adam_;
};

/// Mean per-sample MSE(probabilities, target) over `batch`. Gradients of the
/// mean are added to the parameters' grads; nothing is updated.
double accumulate_gradients(std::span<const EncodedSample> batch,
                            const EmbeddingProvider& encoder, const ModelParams& params,
                            const ModelConfig& cfg);

/// Loss only; no tape is kept and grads are untouched.
double batch_loss(std::span<const EncodedSample> batch, const EmbeddingProvider& encoder,
                  const ModelParams& params, const ModelConfig& cfg);

/// accumulate_gradients followed by one optimizer step over the model and
/// encoder parameters. Returns the pre-step loss.
double train_step(std::span<const EncodedSample> batch, const EmbeddingProvider& encoder,
                  const ModelParams& params, const ModelConfig& cfg, Optimizer& optimizer);

} // namespace hgcn

#endif // HGCN_MODEL_HPP
