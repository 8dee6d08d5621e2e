#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flatrec/aggregate.hpp"

namespace flatrec {

// Layer-ensemble input: the (K+1)^2 grid of inner products between user-side
// and item-side layer representations, row-major in (user layer, item layer).
// Entry (0,0) is the raw embedding dot product.
struct CrossFeatures {
    int K = 0;
    std::vector<double> values;  // length (K+1)^2
};

CrossFeatures cross_features(const LayerRepresentations& user_reprs, NodeId u,
                             const LayerRepresentations& item_reprs, NodeId v);

// Fully-connected scorer with max(0, x) hidden activations and a raw-logit
// output. Parameters and Adam accumulators are 64-bit.
struct ModelParams {
    std::vector<std::size_t> sizes;  // e.g. {9, 64, 32, 1}
    std::vector<std::vector<double>> w;  // w[l]: sizes[l+1] x sizes[l], row-major
    std::vector<std::vector<double>> b;  // b[l]: sizes[l+1]
    // Adam first/second moments, same shapes as w/b.
    std::vector<std::vector<double>> mw, vw, mb, vb;
    std::uint64_t step = 0;

    static ModelParams init(const std::vector<std::size_t>& sizes, std::uint64_t seed);
    std::size_t input_dim() const { return sizes.front(); }
};

struct Gradients {
    std::vector<std::vector<double>> w, b;

    static Gradients zeros_like(const ModelParams& p);
    void add_scaled(const Gradients& o, double s);
    void scale(double s);
};

double forward(const ModelParams& p, std::span<const double> feats);

// Binary cross-entropy on sigmoid(logit) against label in {0,1}; returns the
// loss and adds d(loss)/d(param) into `grad`.
double backward(const ModelParams& p, std::span<const double> feats, double label,
                Gradients& grad);

double bce_loss(double logit, double label);

struct AdamConfig {
    double lr = 1e-3;
    double l2 = 1e-5;  // decoupled weight decay, applied as lr * l2 * param
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(ModelParams& p, const Gradients& grad, const AdamConfig& cfg);

// Max relative error between analytic gradients and central finite
// differences (step 1e-5) of the BCE loss over every parameter.
double gradient_check(const ModelParams& p, std::span<const double> feats, double label);

struct TrainConfig {
    double lr = 1e-3;
    double l2 = 1e-5;
    int epochs = 50;
    int batch = 256;
    int negatives = 1;
    int patience = 5;
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 32;
    std::uint64_t seed = 42;
    // Caps optimizer steps per epoch; 0 means the full pass. Used by the
    // degree-invariance benchmark to fix the workload.
    int max_steps_per_epoch = 0;
};

struct EpochStats {
    int epoch = 0;  // 0 is the pre-training probe
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

// Trains the ensemble scorer on observed pairs (label 1) against uniformly
// sampled non-interacted items (label 0). The trainer sees only the
// precomputed representations plus per-user exclusion lists prepared by the
// caller; graph adjacency is never touched here. 90/10 train/validation
// split with early stopping on validation loss; deterministic per seed.
TrainResult train_model(const LayerRepresentations& reprs,
                        const std::vector<std::pair<NodeId, NodeId>>& positives,
                        const std::vector<std::vector<NodeId>>& user_exclusions,
                        std::size_t n_users, std::size_t n_items, const TrainConfig& cfg);

// Checkpoint: magic FLTM, version, layer sizes, 64-bit weights and biases.
void save_model(const ModelParams& p, const std::string& path);
ModelParams load_model(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace flatrec
