#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flatrec/sampler.hpp"

namespace flatrec {

// Effective configuration for a pipeline run, parsed from a line-oriented
// `key = value` file with dotted keys plus CLI overrides. Unknown keys are
// rejected by name.
struct PipelineConfig {
    // paths
    std::string interactions;         // raw interaction file (split input)
    std::string embed_set;            // split outputs / stage inputs
    std::string model_set;
    std::string test_set;
    std::string embeddings;           // pretrained embedding file
    std::string reprs;                // precomputed layer representations
    std::string checkpoint;           // trained model
    std::string history;              // training history CSV
    std::string report;               // evaluation report CSV
    std::string per_user_report;      // optional per-user CSV ("" = off)
    std::string bench_report;         // sampler comparison CSV

    std::array<double, 3> split_ratios{0.65, 0.15, 0.20};

    int k = 2;                        // subgraph depth K
    std::vector<std::size_t> budgets; // per hop 1..K, default 25 each
    std::string sampler = "infomax";
    int walks = 1000;
    int walk_len = 0;                 // 0 -> 2k

    std::size_t pretrain_dim = 64;
    int pretrain_epochs = 30;
    double pretrain_lr = 0.05;
    double pretrain_reg = 1e-4;

    double train_lr = 1e-3;
    double train_l2 = 1e-5;
    int train_epochs = 50;
    int train_batch = 256;
    int train_negatives = 1;
    int train_patience = 5;
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 32;

    int eval_cutoff = 20;

    std::vector<std::string> bench_samplers{"infomax", "intuitive", "random"};
    std::vector<std::uint64_t> bench_seeds{1, 2, 3};

    std::uint64_t seed = 42;
    int workers = 1;

    // Keys explicitly set by file or override, in the order they arrived.
    std::map<std::string, std::string> raw;

    SamplerConfig sampler_config() const;
    void validate() const;  // throws ConfigError naming the offending key

    // Every key with its effective value, defaults included; this is what
    // run manifests record.
    std::map<std::string, std::string> effective() const;
};

PipelineConfig parse_config_text(const std::string& text, const std::string& source);
PipelineConfig load_config_file(const std::string& path);

// Applies `key=value` overrides (same key syntax as the file) on top.
void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value);

}  // namespace flatrec
