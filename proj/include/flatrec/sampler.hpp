#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flatrec/embedding.hpp"
#include "flatrec/graph.hpp"

namespace flatrec {

struct ScoredNeighbor {
    NodeId node = 0;
    double score = 0.0;
};

// Neighbor informativeness of v for root u:
//   log sigmoid(e_v.e_u) + log(1 - sigmoid(e_v.mean))
// computed as -softplus(-e_v.e_u) - softplus(e_v.mean) so that large dot
// products on either tail stay finite. Natural log; always < 0.
double infomax_score(NodeId v, NodeId u, const EmbeddingMatrix& emb, const MeanEmbedding& mean);

// The exact mutual-information lower bound this criterion relaxes:
//   log sigmoid(e_v.e_u) + 1/(N+M) * sum_u' log(1 - sigmoid(e_v.e_u'))
// O(N+M) per call; intended for tests and small graphs. By Jensen's
// inequality (log(1-sigmoid) is concave) it never exceeds infomax_score.
double exact_info_score(NodeId v, NodeId u, const EmbeddingMatrix& emb);

// Batch form of infomax_score: the mean-embedding penalty term depends only
// on the candidate, so it is tabulated once per node. score(v, u) is
// bit-identical to infomax_score(v, u, emb, mean).
class InfomaxScorer {
public:
    InfomaxScorer(const EmbeddingMatrix& emb, const MeanEmbedding& mean);
    double score(NodeId v, NodeId u) const;

private:
    const EmbeddingMatrix& emb_;
    std::vector<double> penalty_;  // softplus(e_v . mean) per node
};

// Top-`budget` of `scored` by descending score, ties broken by ascending
// node id; the returned ids keep that order.
std::vector<NodeId> top_rank(std::vector<ScoredNeighbor> scored, std::size_t budget);

// The min(budget, |N_u^k|) members of the k-hop neighbor set with the
// largest infomax scores. An empty neighbor set yields an empty list.
std::vector<NodeId> select_topk(const BipartiteGraph& g, NodeId u, int k,
                                const EmbeddingMatrix& emb, const MeanEmbedding& mean,
                                std::size_t budget);

// Visit statistics behind the random-walk baseline: `walks` uniform walks of
// `walk_len` steps from u, counting visits that land in N_u^k, reported as
// L1-normalized frequencies per member (all zero when nothing was visited).
// Walk transitions ignore edge weights. Deterministic per (seed, u, k).
std::vector<ScoredNeighbor> random_walk_visit_freqs(const BipartiteGraph& g, NodeId u, int k,
                                                    int walks, int walk_len, std::uint64_t seed);

// Baseline: ranks the k-hop members by their visit frequency (zero-visit
// members rank last by id, so the budget is still filled).
std::vector<NodeId> random_walk_sample(const BipartiteGraph& g, NodeId u, int k,
                                       std::size_t budget, int walks, int walk_len,
                                       std::uint64_t seed);

// Baseline: hop-1 neighbors score by direct edge weight; hop-k neighbors by
// the sum over level-monotone k-paths of the product of edge weights.
std::vector<NodeId> intuitive_sample(const BipartiteGraph& g, NodeId u, int k,
                                     std::size_t budget);

enum class SamplerKind { Infomax, Intuitive, Random };

SamplerKind sampler_from_name(const std::string& name);
std::string sampler_name(SamplerKind kind);

struct SamplerConfig {
    SamplerKind kind = SamplerKind::Infomax;
    std::vector<std::size_t> budgets;  // budgets[k-1] is the hop-k budget
    int walks = 1000;
    int walk_len = 0;  // 0 -> 2k per hop order
    std::uint64_t seed = 42;
};

// Selected ids per layer 0..K for one root; layer 0 is exactly {root}.
struct SampledNeighborhood {
    NodeId root = 0;
    std::vector<std::vector<NodeId>> layers;
};

// Pure function of (graph, embeddings, config): the random-walk stream is
// derived from (seed, root, k), never from shared state, so concurrent and
// repeated calls agree bitwise. The scorer overload reuses a prebuilt
// penalty table (precompute hot path); results are identical either way.
SampledNeighborhood sample_neighborhood(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                        const MeanEmbedding& mean, NodeId root, int K,
                                        const SamplerConfig& cfg);
SampledNeighborhood sample_neighborhood(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                        const MeanEmbedding& mean, NodeId root, int K,
                                        const SamplerConfig& cfg, const InfomaxScorer* scorer);

}  // namespace flatrec
