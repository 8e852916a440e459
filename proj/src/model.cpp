#include "hgcn/model.hpp"

#include "hgcn/error.hpp"
#include "hgcn/graph.hpp"

#include <cmath>
#include <string>

namespace hgcn {

void ModelConfig::validate() const {
    std::string problems;
    auto fail = [&](const std::string& msg) { problems += (problems.empty() ? "" : "; ") + msg; };
    if (num_layers < 1) {
        fail("num_layers must be >= 1");
    }
    if (hidden < 1) {
        fail("hidden must be >= 1");
    }
    if (num_labels < 1) {
        fail("num_labels must be >= 1");
    }
    if (input_width < 1) {
        fail("input_width must be >= 1");
    }
    if (!problems.empty()) {
        throw ValidationError("invalid model config: " + problems);
    }
}

std::string activation_name(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") {
        return Activation::Relu;
    }
    if (name == "tanh") {
        return Activation::Tanh;
    }
    throw ValidationError("unknown activation '" + name + "' (expected relu or tanh)");
}

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
    j = {{"num_layers", cfg.num_layers},
         {"hidden", cfg.hidden},
         {"num_labels", cfg.num_labels},
         {"input_width", cfg.input_width},
         {"activation", activation_name(cfg.activation)},
         {"detach_edges", cfg.detach_edges},
         {"add_self_loops", cfg.add_self_loops},
         {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
    ModelConfig d;
    cfg.num_layers = j.value("num_layers", d.num_layers);
    cfg.hidden = j.value("hidden", d.hidden);
    cfg.num_labels = j.value("num_labels", d.num_labels);
    cfg.input_width = j.value("input_width", d.input_width);
    cfg.activation = parse_activation(j.value("activation", activation_name(d.activation)));
    cfg.detach_edges = j.value("detach_edges", d.detach_edges);
    cfg.add_self_loops = j.value("add_self_loops", d.add_self_loops);
    cfg.seed = j.value("seed", d.seed);
}

namespace {

NodePtr glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) {
        v = rng.uniform(-s, s);
    }
    return make_parameter(std::move(w));
}

NodePtr copy_param(const NodePtr& p) {
    auto q = make_parameter(p->value);
    q->requires_grad = p->requires_grad;
    return q;
}

} // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams p;
    p.w_token_in = glorot(cfg.input_width, cfg.hidden, rng);
    p.w_label_in = glorot(cfg.num_labels, cfg.hidden, rng);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        p.w_layer.push_back(glorot(cfg.hidden, cfg.hidden, rng));
    }
    return p;
}

std::vector<NodePtr> ModelParams::all() const {
    std::vector<NodePtr> out{w_token_in, w_label_in};
    out.insert(out.end(), w_layer.begin(), w_layer.end());
    return out;
}

ModelParams ModelParams::clone() const {
    ModelParams p;
    p.w_token_in = copy_param(w_token_in);
    p.w_label_in = copy_param(w_label_in);
    for (const auto& w : w_layer) {
        p.w_layer.push_back(copy_param(w));
    }
    return p;
}

std::vector<std::string> ModelParams::names() const {
    std::vector<std::string> out{"w_token_in", "w_label_in"};
    for (std::size_t l = 0; l < w_layer.size(); ++l) {
        out.push_back("w_layer." + std::to_string(l));
    }
    return out;
}

Matrix ForwardTrace::token_features(std::size_t layer) const {
    const Matrix& h = features.at(layer)->value;
    auto rows = h.data().subspan(0, token_count * h.cols());
    return Matrix(token_count, h.cols(), std::vector<double>(rows.begin(), rows.end()));
}

Matrix ForwardTrace::label_features(std::size_t layer) const {
    const Matrix& h = features.at(layer)->value;
    auto rows = h.data().subspan(token_count * h.cols());
    return Matrix(label_count, h.cols(), std::vector<double>(rows.begin(), rows.end()));
}

std::vector<double> ForwardTrace::probabilities() const {
    auto d = probs->value.data();
    return {d.begin(), d.end()};
}

Matrix init_label_features(std::size_t n) { return Matrix::identity(n); }

ForwardTrace forward(const EncodedSample& sample, const EmbeddingProvider& encoder,
                     const ModelParams& params, const ModelConfig& cfg) {
    const std::size_t m = sample.token_ids.size();
    const std::size_t n = cfg.num_labels;
    if (m == 0) {
        throw ValidationError("sample '" + sample.id + "' has no token nodes");
    }
    if (encoder.width() != cfg.input_width) {
        throw DimensionError("encoder width " + std::to_string(encoder.width()) +
                             " does not match model input width " +
                             std::to_string(cfg.input_width));
    }
    if (params.w_layer.size() != cfg.num_layers) {
        throw DimensionError("params have " + std::to_string(params.w_layer.size()) +
                             " layers, config expects " + std::to_string(cfg.num_layers));
    }

    ForwardTrace t;
    t.token_count = m;
    t.label_count = n;
    Tape& tape = t.tape;

    const Matrix a_token = build_chain_adjacency(m);
    const Matrix a_label = build_label_adjacency(n);

    NodePtr x_token = encoder.embed(tape, sample.id, sample.token_ids);
    NodePtr x_label = tape.constant(init_label_features(n));
    NodePtr h = concat_rows(tape, matmul(tape, x_token, params.w_token_in),
                            matmul(tape, x_label, params.w_label_in));
    t.features.push_back(h);

    auto reconstruct = [&](const NodePtr& feats, bool detach) {
        NodePtr tok = slice_rows(tape, feats, 0, m);
        NodePtr lab = slice_rows(tape, feats, m, n);
        if (detach) {
            tok = tape.constant(tok->value);
            lab = tape.constant(lab->value);
        }
        return reconstruct_token_label(tape, tok, lab);
    };

    for (std::size_t l = 1; l <= cfg.num_layers; ++l) {
        NodePtr a_tl = l == 1 ? tape.constant(Matrix::zeros(m, n)) : reconstruct(h, cfg.detach_edges);
        t.token_label.push_back(a_tl);
        NodePtr adj = normalize_adjacency(tape, assemble_block(tape, a_token, a_label, a_tl),
                                          cfg.add_self_loops);
        h = activation(tape, matmul(tape, matmul(tape, adj, h), params.w_layer[l - 1]),
                       cfg.activation);
        t.features.push_back(h);
    }

    NodePtr a_last = reconstruct(h, false);
    t.token_label.push_back(a_last);
    t.scores = matmul(tape, tape.constant(Matrix::ones(1, m)), a_last);
    t.probs = softmax_row(tape, t.scores);
    return t;
}

Matrix build_target(std::span<const std::size_t> positives, std::size_t n) {
    if (n == 0) {
        throw ValidationError("target needs at least one label");
    }
    Matrix target(1, n);
    if (positives.empty()) {
        target.fill(1.0 / static_cast<double>(n));
        return target;
    }
    for (std::size_t j : positives) {
        if (j >= n) {
            throw ValidationError("label index " + std::to_string(j) + " out of range for " +
                                  std::to_string(n) + " labels");
        }
        target(0, j) = 1.0;
    }
    const double k = target.sum();
    target *= 1.0 / k;
    return target;
}

Matrix build_target(std::span<const int> binary) {
    std::vector<std::size_t> positives;
    for (std::size_t j = 0; j < binary.size(); ++j) {
        if (binary[j] != 0) {
            positives.push_back(j);
        }
    }
    return build_target(positives, binary.size());
}

Optimizer::Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {
    if (!std::isfinite(lr) || lr < 0.0) {
        throw ValidationError("learning rate must be finite and non-negative");
    }
    if (kind_ == OptimizerKind::Adam) {
        adam_.emplace(AdamOptions{.lr = lr});
    }
}

void Optimizer::step(std::span<const NodePtr> params) {
    if (adam_) {
        adam_->step(params);
    } else {
        sgd_step(params, lr_);
    }
}

namespace {

void require_batch(std::span<const EncodedSample> batch) {
    if (batch.empty()) {
        throw ValidationError("training batch is empty");
    }
}

} // namespace

double accumulate_gradients(std::span<const EncodedSample> batch,
                            const EmbeddingProvider& encoder, const ModelParams& params,
                            const ModelConfig& cfg) {
    require_batch(batch);
    const double inv = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& s : batch) {
        ForwardTrace t = forward(s, encoder, params, cfg);
        NodePtr loss = mse_loss(t.tape, t.probs, build_target(s.labels, cfg.num_labels));
        total += loss->value(0, 0);
        t.tape.backward(scale(t.tape, loss, inv));
    }
    return total * inv;
}

double batch_loss(std::span<const EncodedSample> batch, const EmbeddingProvider& encoder,
                  const ModelParams& params, const ModelConfig& cfg) {
    require_batch(batch);
    double total = 0.0;
    for (const auto& s : batch) {
        ForwardTrace t = forward(s, encoder, params, cfg);
        const Matrix target = build_target(s.labels, cfg.num_labels);
        double sq = 0.0;
        for (std::size_t j = 0; j < target.cols(); ++j) {
            const double d = t.probs->value(0, j) - target(0, j);
            sq += d * d;
        }
        total += sq / static_cast<double>(target.cols());
    }
    return total / static_cast<double>(batch.size());
}

double train_step(std::span<const EncodedSample> batch, const EmbeddingProvider& encoder,
                  const ModelParams& params, const ModelConfig& cfg, Optimizer& optimizer) {
    const double loss = accumulate_gradients(batch, encoder, params, cfg);
    std::vector<NodePtr> all = params.all();
    for (auto& p : encoder.parameters()) {
        all.push_back(std::move(p));
    }
    optimizer.step(all);
    return loss;
}

} // namespace hgcn
