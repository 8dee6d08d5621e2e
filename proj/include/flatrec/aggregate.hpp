#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flatrec/sampler.hpp"

namespace flatrec {

// Flattened layer representations: per node, K+1 vectors h^0..h^K where h^0
// is the node's own embedding row and h^k is the mean embedding of its
// selected hop-k neighbors. An empty layer stores a zero vector and sets a
// flag. Computed once before training; immutable afterwards.
class LayerRepresentations {
public:
    LayerRepresentations() = default;
    LayerRepresentations(std::size_t n_nodes, std::size_t dim, int K)
        : n_nodes_(n_nodes),
          dim_(dim),
          K_(K),
          data_(n_nodes * (static_cast<std::size_t>(K) + 1) * dim, 0.0f),
          empty_(n_nodes * (static_cast<std::size_t>(K) + 1), 0) {}

    std::size_t n_nodes() const { return n_nodes_; }
    std::size_t dim() const { return dim_; }
    int layer_count() const { return K_ + 1; }
    int K() const { return K_; }

    std::span<const float> layer(NodeId v, int k) const {
        return {data_.data() + slot(v, k) * dim_, dim_};
    }
    std::span<float> layer_mut(NodeId v, int k) { return {data_.data() + slot(v, k) * dim_, dim_}; }

    bool layer_empty(NodeId v, int k) const { return empty_[slot(v, k)] != 0; }
    void set_layer_empty(NodeId v, int k, bool e) { empty_[slot(v, k)] = e ? 1 : 0; }

    const std::vector<float>& data() const { return data_; }
    const std::vector<std::uint8_t>& empty_flags() const { return empty_; }

    bool operator==(const LayerRepresentations& o) const = default;

private:
    std::size_t slot(NodeId v, int k) const {
        return static_cast<std::size_t>(v) * (static_cast<std::size_t>(K_) + 1) +
               static_cast<std::size_t>(k);
    }

    std::size_t n_nodes_ = 0;
    std::size_t dim_ = 0;
    int K_ = 0;
    std::vector<float> data_;
    std::vector<std::uint8_t> empty_;
};

struct AggregatedLayer {
    std::vector<float> values;
    bool empty = false;
};

// Mean of the members' embedding rows, accumulated in 64-bit and stored as
// float32. The divisor is the actual member count, not the nominal budget,
// so sparse neighborhoods are not shrunk toward zero. Empty member list
// yields the zero vector with the empty flag set.
AggregatedLayer aggregate_layer(std::span<const NodeId> members, const EmbeddingMatrix& emb);

// Fills all layers of one node from an already-sampled neighborhood.
void aggregate_node(const SampledNeighborhood& sampled, const EmbeddingMatrix& emb,
                    LayerRepresentations& out);

// One-shot parallel precompute over all N+M nodes. Each node's result is a
// pure function of (graph, embeddings, config), written to its own slot, so
// the output is bitwise independent of `workers`.
LayerRepresentations precompute_all(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                    const MeanEmbedding& mean, const SamplerConfig& cfg, int K,
                                    int workers);

// Binary persistence: magic FLTR, version, node count, dim, K, row-major
// float32 layers per node, then the per-layer empty flags. load(save(x))
// round-trips bitwise. Pass expect_K to reject a file built for a different
// layer count.
void save_reprs(const LayerRepresentations& reprs, const std::string& path);
LayerRepresentations load_reprs(const std::string& path,
                                std::optional<int> expect_K = std::nullopt);

}  // namespace flatrec
