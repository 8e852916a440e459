#include "hgcn/config.hpp"

#include "hgcn/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace hgcn {

std::vector<std::string> RunConfig::problems() const {
    std::vector<std::string> out;
    if (labels.empty()) {
        out.emplace_back("no labels declared");
    }
    std::set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) {
            out.push_back(fmt::format("label '{}' declared twice", l));
        }
    }
    if (model.num_layers < 1) {
        out.emplace_back("layers must be >= 1");
    }
    if (model.hidden < 1) {
        out.emplace_back("hidden must be >= 1");
    }
    if (model.input_width < 1) {
        out.emplace_back("embed_dim must be >= 1");
    }
    if (training.batch_size < 1) {
        out.emplace_back("batch_size must be >= 1");
    }
    if (!(training.lr >= 0.0)) {
        out.emplace_back("lr must be non-negative");
    }
    if (max_len < 3) {
        out.emplace_back("max_len must be >= 3");
    }
    const auto& d = training.decode;
    if (d.kind == DecodeMethod::Kind::TopK && d.k < 1) {
        out.emplace_back("decode topk needs k >= 1");
    }
    if (d.kind == DecodeMethod::Kind::Threshold && !(d.threshold > 0.0 && d.threshold <= 1.0)) {
        out.emplace_back("decode threshold must lie in (0, 1]");
    }
    if (encoder != "lookup" && encoder.rfind("file:", 0) != 0) {
        out.push_back(fmt::format("encoder '{}' is not 'lookup' or 'file:PATH'", encoder));
    }
    if (encoder.rfind("file:", 0) == 0 && encoder.size() == 5) {
        out.emplace_back("encoder file: needs a path");
    }
    return out;
}

std::filesystem::path RunConfig::checkpoint_path() const {
    return checkpoint.empty() ? out_dir / "model.ckpt" : checkpoint;
}

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    model.seed = s;
    training.seed = s;
}

RunConfig load_run_config(const std::filesystem::path& path, std::vector<std::string>& problems) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw ValidationError("config '" + path.string() + "' must be a JSON object");
    }
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        std::filesystem::path q(p);
        return q.is_absolute() || base.empty() ? q : base / q;
    };

    RunConfig c;
    static const std::set<std::string> known = {
        "labels", "train", "dev", "test", "out", "checkpoint", "seed", "layers",
        "hidden", "embed_dim", "activation", "detach_edges", "add_self_loops", "epochs",
        "batch_size", "lr", "optimizer", "max_len", "decode", "encoder", "freeze",
        "early_stop_jaccard", "triggers"};
    for (const auto& [key, value] : j.items()) {
        if (known.count(key) == 0) {
            problems.push_back(fmt::format("unknown config key '{}'", key));
        }
    }

    auto read = [&](const char* key, auto& dst) {
        if (!j.contains(key)) {
            return;
        }
        try {
            j.at(key).get_to(dst);
        } catch (const nlohmann::json::exception&) {
            problems.push_back(fmt::format("config key '{}' has the wrong type", key));
        }
    };
    std::string s;
    read("labels", c.labels);
    if (j.contains("train")) { s.clear(); read("train", s); c.train_path = resolve(s); }
    if (j.contains("dev")) { s.clear(); read("dev", s); c.dev_path = resolve(s); }
    if (j.contains("test")) { s.clear(); read("test", s); c.test_path = resolve(s); }
    if (j.contains("out")) { s.clear(); read("out", s); c.out_dir = resolve(s); }
    if (j.contains("checkpoint")) { s.clear(); read("checkpoint", s); c.checkpoint = resolve(s); }
    std::uint64_t seed = c.seed;
    read("seed", seed);
    c.apply_seed(seed);
    read("layers", c.model.num_layers);
    read("hidden", c.model.hidden);
    read("embed_dim", c.model.input_width);
    read("detach_edges", c.model.detach_edges);
    read("add_self_loops", c.model.add_self_loops);
    read("epochs", c.training.epochs);
    read("batch_size", c.training.batch_size);
    read("lr", c.training.lr);
    read("max_len", c.max_len);
    read("freeze", c.freeze);
    read("early_stop_jaccard", c.training.early_stop_jaccard);
    read("encoder", c.encoder);
    if (c.encoder.rfind("file:", 0) == 0 && c.encoder.size() > 5) {
        c.encoder = "file:" + resolve(c.encoder.substr(5)).string();
    }
    if (j.contains("activation")) {
        s.clear();
        read("activation", s);
        try {
            c.model.activation = parse_activation(s);
        } catch (const ValidationError& e) {
            problems.emplace_back(e.what());
        }
    }
    if (j.contains("optimizer")) {
        s.clear();
        read("optimizer", s);
        if (s == "adam") {
            c.training.optimizer = OptimizerKind::Adam;
        } else if (s == "sgd") {
            c.training.optimizer = OptimizerKind::Sgd;
        } else {
            problems.push_back(fmt::format("unknown optimizer '{}' (expected adam or sgd)", s));
        }
    }
    if (j.contains("decode")) {
        s.clear();
        read("decode", s);
        try {
            c.training.decode = DecodeMethod::parse(s);
        } catch (const ValidationError& e) {
            problems.emplace_back(e.what());
        }
    }
    return c;
}

} // namespace hgcn
