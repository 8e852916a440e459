#ifndef HGCN_CONFIG_HPP
#define HGCN_CONFIG_HPP

#include "hgcn/classifier.hpp"
#include "hgcn/metrics.hpp"
#include "hgcn/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hgcn {

/// Everything a CLI run needs. Built from a JSON config file, then
/// overridden by command-line flags.
///
/// Config file keys (all optional, relative paths resolve against the
/// config file's directory):
///   labels, train, dev, test, out, checkpoint, seed, layers, hidden,
///   embed_dim, activation, detach_edges, add_self_loops, epochs,
///   batch_size, lr, optimizer, max_len, decode, encoder, freeze,
///   early_stop_jaccard
struct RunConfig {
    std::filesystem::path train_path;
    std::filesystem::path dev_path;
    std::filesystem::path test_path;
    std::vector<std::string> labels;
    ModelConfig model;
    TrainOptions training;
    std::size_t max_len = 32;
    /// "lookup" or "file:<path>".
    std::string encoder = "lookup";
    bool freeze = false;
    std::filesystem::path out_dir = "out";
    /// Defaults to <out_dir>/model.ckpt when empty.
    std::filesystem::path checkpoint;
    std::uint64_t seed = 42;

    /// Every violated constraint, in a stable order; empty when valid.
    std::vector<std::string> problems() const;
    std::filesystem::path checkpoint_path() const;
    /// Pushes `seed` into the model and training options.
    void apply_seed(std::uint64_t s);
};

/// Reads a config file. Type errors are collected into `problems` rather
/// than thrown, so callers can report them together with validation errors.
RunConfig load_run_config(const std::filesystem::path& path, std::vector<std::string>& problems);

} // namespace hgcn

#endif // HGCN_CONFIG_HPP
