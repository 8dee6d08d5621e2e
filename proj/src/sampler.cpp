#include "flatrec/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "flatrec/error.hpp"
#include "flatrec/rng.hpp"

namespace flatrec {

namespace {

inline double softplus(double x) {
    // log(1 + e^x) without overflow on the positive tail
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

double infomax_score(NodeId v, NodeId u, const EmbeddingMatrix& emb, const MeanEmbedding& mean) {
    const double affinity = dot(emb.row(v), emb.row(u));
    const double to_mean = dot(emb.row(v), std::span<const double>(mean));
    return -softplus(-affinity) - softplus(to_mean);
}

double exact_info_score(NodeId v, NodeId u, const EmbeddingMatrix& emb) {
    const double affinity = dot(emb.row(v), emb.row(u));
    double tail = 0.0;
    for (std::size_t w = 0; w < emb.rows(); ++w)
        tail += softplus(dot(emb.row(v), emb.row(static_cast<NodeId>(w))));
    return -softplus(-affinity) - tail / static_cast<double>(emb.rows());
}

InfomaxScorer::InfomaxScorer(const EmbeddingMatrix& emb, const MeanEmbedding& mean) : emb_(emb) {
    penalty_.resize(emb.rows());
    for (std::size_t v = 0; v < emb.rows(); ++v)
        penalty_[v] = softplus(dot(emb.row(static_cast<NodeId>(v)), std::span<const double>(mean)));
}

double InfomaxScorer::score(NodeId v, NodeId u) const {
    return -softplus(-dot(emb_.row(v), emb_.row(u))) - penalty_[v];
}

std::vector<NodeId> top_rank(std::vector<ScoredNeighbor> scored, std::size_t budget) {
    auto better = [](const ScoredNeighbor& a, const ScoredNeighbor& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    };
    // The (score desc, id asc) comparator is a strict total order, so
    // selecting before sorting returns exactly the full-sort prefix.
    if (scored.size() > budget) {
        std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(budget),
                         scored.end(), better);
        scored.resize(budget);
    }
    std::sort(scored.begin(), scored.end(), better);
    std::vector<NodeId> out;
    out.reserve(scored.size());
    for (const auto& s : scored) out.push_back(s.node);
    return out;
}

std::vector<NodeId> select_topk(const BipartiteGraph& g, NodeId u, int k,
                                const EmbeddingMatrix& emb, const MeanEmbedding& mean,
                                std::size_t budget) {
    if (budget == 0) throw Error("sampling budget must be >= 1");
    NeighborSet ns = g.neighbor_set(u, k);
    std::vector<ScoredNeighbor> scored;
    scored.reserve(ns.members.size());
    for (NodeId v : ns.members) scored.push_back({v, infomax_score(v, u, emb, mean)});
    return top_rank(std::move(scored), budget);
}

namespace {

std::vector<ScoredNeighbor> walk_freqs_over(const BipartiteGraph& g, NodeId u, int k,
                                            const std::vector<NodeId>& members, int walks,
                                            int walk_len, std::uint64_t seed) {
    std::unordered_map<NodeId, std::size_t> member_index;
    member_index.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) member_index.emplace(members[i], i);

    std::vector<std::uint64_t> visits(members.size(), 0);
    std::uint64_t total = 0;
    Rng rng(fork_seed(seed, u, static_cast<std::uint64_t>(k)));
    for (int w = 0; w < walks; ++w) {
        NodeId cur = u;
        for (int step = 0; step < walk_len; ++step) {
            auto nbrs = g.neighbors(cur);
            if (nbrs.empty()) break;
            cur = nbrs[rng.uniform(nbrs.size())];
            auto it = member_index.find(cur);
            if (it != member_index.end()) {
                ++visits[it->second];
                ++total;
            }
        }
    }

    std::vector<ScoredNeighbor> out;
    out.reserve(members.size());
    const double inv = total > 0 ? 1.0 / static_cast<double>(total) : 0.0;
    for (std::size_t i = 0; i < members.size(); ++i)
        out.push_back({members[i], static_cast<double>(visits[i]) * inv});
    return out;
}

// Path-product scores for every BFS level: level-1 nodes get their direct
// edge weight, level-k nodes the sum over level-monotone k-paths of weight
// products. The DP for level k never looks past level k, so per-level
// results agree with a DP truncated at that level.
std::vector<std::unordered_map<NodeId, double>> path_product_scores(
    const BipartiteGraph& g, const std::vector<std::vector<NodeId>>& levels) {
    std::vector<std::unordered_map<NodeId, double>> scores(levels.size());
    scores[0].emplace(levels[0][0], 1.0);
    for (std::size_t level = 1; level < levels.size(); ++level) {
        auto& cur = scores[level];
        cur.reserve(levels[level].size());
        for (NodeId v : levels[level]) cur.emplace(v, 0.0);
        for (NodeId w : levels[level - 1]) {
            const double sw = scores[level - 1].at(w);
            auto nbrs = g.neighbors(w);
            auto wts = g.neighbor_weights(w);
            for (std::size_t e = 0; e < nbrs.size(); ++e) {
                auto it = cur.find(nbrs[e]);
                if (it != cur.end()) it->second += sw * wts[e];
            }
        }
    }
    return scores;
}

}  // namespace

std::vector<ScoredNeighbor> random_walk_visit_freqs(const BipartiteGraph& g, NodeId u, int k,
                                                    int walks, int walk_len, std::uint64_t seed) {
    if (walks < 1) throw Error("walks must be >= 1");
    if (walk_len < k) throw Error("walk_len must be >= hop order");
    NeighborSet ns = g.neighbor_set(u, k);
    return walk_freqs_over(g, u, k, ns.members, walks, walk_len, seed);
}

std::vector<NodeId> random_walk_sample(const BipartiteGraph& g, NodeId u, int k,
                                       std::size_t budget, int walks, int walk_len,
                                       std::uint64_t seed) {
    if (budget == 0) throw Error("sampling budget must be >= 1");
    return top_rank(random_walk_visit_freqs(g, u, k, walks, walk_len, seed), budget);
}

std::vector<NodeId> intuitive_sample(const BipartiteGraph& g, NodeId u, int k,
                                     std::size_t budget) {
    if (budget == 0) throw Error("sampling budget must be >= 1");
    if (k < 1) throw Error("intuitive sampling needs hop order >= 1");

    auto levels = g.bfs_levels(u, k);
    auto scores = path_product_scores(g, levels);
    std::vector<ScoredNeighbor> scored;
    scored.reserve(levels[k].size());
    for (NodeId v : levels[k]) scored.push_back({v, scores[k].at(v)});
    return top_rank(std::move(scored), budget);
}

SamplerKind sampler_from_name(const std::string& name) {
    if (name == "infomax") return SamplerKind::Infomax;
    if (name == "intuitive") return SamplerKind::Intuitive;
    if (name == "random") return SamplerKind::Random;
    throw Error("unknown sampler '" + name + "' (expected infomax|intuitive|random)");
}

std::string sampler_name(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Infomax: return "infomax";
        case SamplerKind::Intuitive: return "intuitive";
        case SamplerKind::Random: return "random";
    }
    return "?";
}

SampledNeighborhood sample_neighborhood(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                        const MeanEmbedding& mean, NodeId root, int K,
                                        const SamplerConfig& cfg) {
    return sample_neighborhood(g, emb, mean, root, K, cfg, nullptr);
}

SampledNeighborhood sample_neighborhood(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                        const MeanEmbedding& mean, NodeId root, int K,
                                        const SamplerConfig& cfg, const InfomaxScorer* scorer) {
    if (K < 1) throw Error("K must be >= 1");
    if (cfg.budgets.size() < static_cast<std::size_t>(K))
        throw Error("need a sampling budget for every hop 1.." + std::to_string(K));
    for (std::size_t b = 0; b < static_cast<std::size_t>(K); ++b)
        if (cfg.budgets[b] == 0) throw Error("sampling budget must be >= 1");

    // One BFS to depth K serves every layer.
    auto levels = g.bfs_levels(root, K);
    std::vector<std::unordered_map<NodeId, double>> path_scores;
    if (cfg.kind == SamplerKind::Intuitive) path_scores = path_product_scores(g, levels);

    SampledNeighborhood out;
    out.root = root;
    out.layers.resize(static_cast<std::size_t>(K) + 1);
    out.layers[0] = {root};
    for (int k = 1; k <= K; ++k) {
        const std::size_t budget = cfg.budgets[static_cast<std::size_t>(k) - 1];
        const auto& members = levels[static_cast<std::size_t>(k)];
        std::vector<ScoredNeighbor> scored;
        scored.reserve(members.size());
        switch (cfg.kind) {
            case SamplerKind::Infomax:
                for (NodeId v : members)
                    scored.push_back(
                        {v, scorer ? scorer->score(v, root) : infomax_score(v, root, emb, mean)});
                break;
            case SamplerKind::Intuitive:
                for (NodeId v : members)
                    scored.push_back({v, path_scores[static_cast<std::size_t>(k)].at(v)});
                break;
            case SamplerKind::Random: {
                int len = cfg.walk_len > 0 ? cfg.walk_len : 2 * k;
                if (len < k) throw Error("walk_len must be >= hop order");
                scored = walk_freqs_over(g, root, k, members, cfg.walks, len, cfg.seed);
                break;
            }
        }
        out.layers[k] = top_rank(std::move(scored), budget);
    }
    return out;
}

}  // namespace flatrec
