#include "flatrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "flatrec/binio.hpp"
#include "flatrec/error.hpp"
#include "flatrec/rng.hpp"

namespace flatrec {

CrossFeatures cross_features(const LayerRepresentations& user_reprs, NodeId u,
                             const LayerRepresentations& item_reprs, NodeId v) {
    if (user_reprs.K() != item_reprs.K() || user_reprs.dim() != item_reprs.dim())
        throw Error("layer representations disagree on K or dim");
    const int layers = user_reprs.layer_count();
    CrossFeatures f;
    f.K = user_reprs.K();
    f.values.reserve(static_cast<std::size_t>(layers) * layers);
    for (int i = 0; i < layers; ++i) {
        auto hu = user_reprs.layer(u, i);
        for (int j = 0; j < layers; ++j) f.values.push_back(dot(hu, item_reprs.layer(v, j)));
    }
    return f;
}

ModelParams ModelParams::init(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw Error("model needs at least input and output layers");
    for (std::size_t s : sizes)
        if (s == 0) throw Error("model layer sizes must be >= 1");

    ModelParams p;
    p.sizes = sizes;
    Rng rng(fork_seed(seed, 0x6d6c7021ULL));
    const std::size_t L = sizes.size() - 1;
    p.w.resize(L);
    p.b.resize(L);
    p.mw.resize(L);
    p.vw.resize(L);
    p.mb.resize(L);
    p.vb.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t fan_in = sizes[l], fan_out = sizes[l + 1];
        // Kaiming-style uniform bound for max(0, x) hidden units.
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        p.w[l].resize(fan_out * fan_in);
        for (double& x : p.w[l]) x = rng.uniform_real(-bound, bound);
        p.b[l].assign(fan_out, 0.0);
        p.mw[l].assign(fan_out * fan_in, 0.0);
        p.vw[l].assign(fan_out * fan_in, 0.0);
        p.mb[l].assign(fan_out, 0.0);
        p.vb[l].assign(fan_out, 0.0);
    }
    return p;
}

Gradients Gradients::zeros_like(const ModelParams& p) {
    Gradients g;
    g.w.resize(p.w.size());
    g.b.resize(p.b.size());
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        g.w[l].assign(p.w[l].size(), 0.0);
        g.b[l].assign(p.b[l].size(), 0.0);
    }
    return g;
}

void Gradients::add_scaled(const Gradients& o, double s) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].size(); ++i) w[l][i] += s * o.w[l][i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += s * o.b[l][i];
    }
}

void Gradients::scale(double s) {
    for (auto& layer : w)
        for (double& x : layer) x *= s;
    for (auto& layer : b)
        for (double& x : layer) x *= s;
}

namespace {

// Forward pass keeping post-activation values per layer for backprop.
double forward_acts(const ModelParams& p, std::span<const double> feats,
                    std::vector<std::vector<double>>& acts) {
    if (feats.size() != p.input_dim())
        throw Error("feature length " + std::to_string(feats.size()) + " does not match model input " +
                    std::to_string(p.input_dim()));
    const std::size_t L = p.w.size();
    acts.assign(L + 1, {});
    acts[0].assign(feats.begin(), feats.end());
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = p.sizes[l], out = p.sizes[l + 1];
        acts[l + 1].assign(out, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            double z = p.b[l][o];
            const double* wrow = p.w[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) z += wrow[i] * acts[l][i];
            acts[l + 1][o] = (l + 1 < L) ? std::max(0.0, z) : z;  // linear output logit
        }
    }
    return acts[L][0];
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

double forward(const ModelParams& p, std::span<const double> feats) {
    std::vector<std::vector<double>> acts;
    return forward_acts(p, feats, acts);
}

double bce_loss(double logit, double label) { return softplus(logit) - label * logit; }

double backward(const ModelParams& p, std::span<const double> feats, double label,
                Gradients& grad) {
    std::vector<std::vector<double>> acts;
    const double logit = forward_acts(p, feats, acts);
    const double loss = bce_loss(logit, label);

    const std::size_t L = p.w.size();
    // dL/dz for the output logit; hidden deltas flow back through the
    // max(0, x) mask (derivative taken as 0 at exactly 0).
    std::vector<double> delta(1, 1.0 / (1.0 + std::exp(-logit)) - label);
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t in = p.sizes[l], out = p.sizes[l + 1];
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            grad.b[l][o] += d;
            double* grow = grad.w[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) grow[i] += d * acts[l][i];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            const double* wrow = p.w[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += d * wrow[i];
        }
        for (std::size_t i = 0; i < in; ++i)
            if (acts[l][i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
    }
    return loss;
}

void adam_step(ModelParams& p, const Gradients& grad, const AdamConfig& cfg) {
    p.step += 1;
    const double t = static_cast<double>(p.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    auto update = [&](std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g, bool decay) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            double upd = mhat / (std::sqrt(vhat) + cfg.eps);
            if (decay) upd += cfg.l2 * theta[i];  // decoupled weight decay
            theta[i] -= cfg.lr * upd;
        }
    };
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        update(p.w[l], p.mw[l], p.vw[l], grad.w[l], true);
        update(p.b[l], p.mb[l], p.vb[l], grad.b[l], false);
    }
}

double gradient_check(const ModelParams& p, std::span<const double> feats, double label) {
    Gradients analytic = Gradients::zeros_like(p);
    backward(p, feats, label, analytic);

    ModelParams probe = p;
    const double h = 1e-5;
    double max_rel = 0.0;
    auto check = [&](std::vector<double>& theta, const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double lp = bce_loss(forward(probe, feats), label);
            theta[i] = saved - h;
            const double lm = bce_loss(forward(probe, feats), label);
            theta[i] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double rel = std::abs(g[i] - fd) / std::max(std::abs(g[i]) + std::abs(fd), 1e-6);
            max_rel = std::max(max_rel, rel);
        }
    };
    for (std::size_t l = 0; l < probe.w.size(); ++l) {
        check(probe.w[l], analytic.w[l]);
        check(probe.b[l], analytic.b[l]);
    }
    return max_rel;
}

namespace {

// Uniformly samples an item the user has no recorded interaction with.
// `excl` is sorted ascending; gives up after a bounded number of rejections
// when a user has interacted with nearly everything.
NodeId sample_negative(Rng& rng, const std::vector<NodeId>& excl, std::size_t n_users,
                       std::size_t n_items) {
    for (int tries = 0; tries < 64; ++tries) {
        NodeId cand = static_cast<NodeId>(n_users + rng.uniform(n_items));
        if (!std::binary_search(excl.begin(), excl.end(), cand)) return cand;
    }
    return static_cast<NodeId>(n_users + rng.uniform(n_items));
}

struct Example {
    NodeId user;
    NodeId item;
    double label;
};

double mean_loss(const ModelParams& p, const LayerRepresentations& reprs,
                 const std::vector<Example>& examples) {
    double total = 0.0;
    for (const auto& ex : examples) {
        CrossFeatures f = cross_features(reprs, ex.user, reprs, ex.item);
        total += bce_loss(forward(p, f.values), ex.label);
    }
    return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train_model(const LayerRepresentations& reprs,
                        const std::vector<std::pair<NodeId, NodeId>>& positives,
                        const std::vector<std::vector<NodeId>>& user_exclusions,
                        std::size_t n_users, std::size_t n_items, const TrainConfig& cfg) {
    if (positives.empty()) throw Error("model training set is empty");
    if (n_items == 0) throw Error("no items to sample negatives from");
    if (cfg.batch < 1 || cfg.negatives < 1 || cfg.epochs < 0)
        throw Error("train config values must be positive");

    const std::size_t layers = static_cast<std::size_t>(reprs.layer_count());
    const std::size_t in_dim = layers * layers;
    ModelParams params =
        ModelParams::init({in_dim, cfg.hidden1, cfg.hidden2, 1}, fork_seed(cfg.seed, 0x696e6974ULL));

    // 90/10 train/validation split over the positives, fixed for the run.
    std::vector<std::size_t> order(positives.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(fork_seed(cfg.seed, 0x73706c69ULL));
    split_rng.shuffle(order);
    std::size_t n_val = positives.size() / 10;
    if (positives.size() >= 2 && n_val == 0) n_val = 1;

    std::vector<std::pair<NodeId, NodeId>> train_pos, val_pos;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_val ? val_pos : train_pos).push_back(positives[order[i]]);
    if (train_pos.empty()) throw Error("train split is empty; need more positives");

    // Validation examples are frozen once (positives plus seeded negatives)
    // so epoch-to-epoch losses are comparable.
    std::vector<Example> val_examples;
    {
        Rng vrng(fork_seed(cfg.seed, 0x76616c21ULL));
        for (const auto& [u, i] : val_pos) {
            val_examples.push_back({u, i, 1.0});
            for (int nn = 0; nn < cfg.negatives; ++nn)
                val_examples.push_back({u, sample_negative(vrng, user_exclusions[u], n_users, n_items), 0.0});
        }
    }
    // A fixed train probe mirrors the validation set for the epoch-0 row.
    std::vector<Example> train_probe;
    {
        Rng prng(fork_seed(cfg.seed, 0x70726f62ULL));
        const std::size_t probe_n = std::min<std::size_t>(train_pos.size(), 2048);
        for (std::size_t i = 0; i < probe_n; ++i) {
            auto [u, it] = train_pos[i];
            train_probe.push_back({u, it, 1.0});
            for (int nn = 0; nn < cfg.negatives; ++nn)
                train_probe.push_back({u, sample_negative(prng, user_exclusions[u], n_users, n_items), 0.0});
        }
    }

    TrainResult result;
    const double probe0 = mean_loss(params, reprs, train_probe);
    result.history.push_back(
        {0, probe0, val_examples.empty() ? probe0 : mean_loss(params, reprs, val_examples)});

    AdamConfig adam{cfg.lr, cfg.l2, 0.9, 0.999, 1e-8};
    ModelParams best = params;
    double best_val = result.history[0].val_loss;
    int best_epoch = 0;
    int since_best = 0;

    std::vector<std::size_t> epoch_order(train_pos.size());
    for (std::size_t i = 0; i < epoch_order.size(); ++i) epoch_order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng erng(fork_seed(cfg.seed, 0x65706f68ULL, static_cast<std::uint64_t>(epoch)));
        erng.shuffle(epoch_order);

        double epoch_loss = 0.0;
        std::size_t epoch_examples = 0;
        Gradients grad = Gradients::zeros_like(params);
        std::size_t in_batch = 0;
        int steps = 0;

        auto flush = [&]() {
            if (in_batch == 0) return;
            grad.scale(1.0 / static_cast<double>(in_batch));
            adam_step(params, grad, adam);
            grad = Gradients::zeros_like(params);
            in_batch = 0;
            ++steps;
        };

        for (std::size_t idx : epoch_order) {
            if (cfg.max_steps_per_epoch > 0 && steps >= cfg.max_steps_per_epoch) break;
            auto [u, i] = train_pos[idx];
            CrossFeatures f = cross_features(reprs, u, reprs, i);
            epoch_loss += backward(params, f.values, 1.0, grad);
            ++epoch_examples;
            ++in_batch;
            for (int nn = 0; nn < cfg.negatives; ++nn) {
                NodeId j = sample_negative(erng, user_exclusions[u], n_users, n_items);
                CrossFeatures fn = cross_features(reprs, u, reprs, j);
                epoch_loss += backward(params, fn.values, 0.0, grad);
                ++epoch_examples;
                ++in_batch;
            }
            if (in_batch >= static_cast<std::size_t>(cfg.batch)) flush();
        }
        flush();

        for (const auto& layer : params.w)
            for (double x : layer)
                if (!std::isfinite(x)) throw Error("training diverged (non-finite parameter)");

        const double train_loss =
            epoch_examples ? epoch_loss / static_cast<double>(epoch_examples) : 0.0;
        const double val_loss =
            val_examples.empty() ? train_loss : mean_loss(params, reprs, val_examples);
        result.history.push_back({epoch, train_loss, val_loss});

        if (val_loss < best_val) {
            best_val = val_loss;
            best = params;
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience && cfg.patience > 0) {
            break;
        }
    }

    result.params = std::move(best);
    result.best_epoch = best_epoch;
    return result;
}

namespace {
constexpr char kModelMagic[5] = "FLTM";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_model(const ModelParams& p, const std::string& path) {
    BinWriter w(path);
    w.magic(kModelMagic);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(p.sizes.size()));
    for (std::size_t s : p.sizes) w.u64(s);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        for (double x : p.w[l]) w.f64(x);
        for (double x : p.b[l]) w.f64(x);
    }
    w.close();
}

ModelParams load_model(const std::string& path) {
    BinReader r(path);
    r.expect_magic(kModelMagic, "model checkpoint");
    std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw VersionError(path + ": unsupported checkpoint version " + std::to_string(version));
    std::uint32_t n_sizes = r.u32();
    if (n_sizes < 2) throw TruncatedError(path + ": checkpoint has no layers");
    std::vector<std::size_t> sizes(n_sizes);
    for (auto& s : sizes) s = r.u64();

    ModelParams p = ModelParams::init(sizes, 0);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        for (double& x : p.w[l]) x = r.f64();
        for (double& x : p.b[l]) x = r.f64();
        std::fill(p.mw[l].begin(), p.mw[l].end(), 0.0);
        std::fill(p.vw[l].begin(), p.vw[l].end(), 0.0);
    }
    p.step = 0;
    return p;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g", e.epoch, e.train_loss, e.val_loss);
        out << buf << '\n';
    }
    if (!out) throw Error("write failed: " + path);
}

}  // namespace flatrec
