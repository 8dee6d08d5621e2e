#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "flatrec/graph.hpp"

namespace flatrec {

// Dense node features, one d-dimensional row per unified node id. Rows are
// stored as 32-bit floats; score and loss arithmetic elsewhere runs in
// 64-bit. Immutable once loaded or pretrained.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t dim)
        : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }

    std::span<const float> row(NodeId v) const { return {data_.data() + v * dim_, dim_}; }
    std::span<float> row_mut(NodeId v) { return {data_.data() + v * dim_, dim_}; }

    const std::vector<float>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

using MeanEmbedding = std::vector<double>;

// Componentwise arithmetic mean over all rows, accumulated in 64-bit.
MeanEmbedding mean_embedding(const EmbeddingMatrix& m);

double dot(std::span<const float> a, std::span<const float> b);
double dot(std::span<const float> a, std::span<const double> b);

// Text embedding format:
//   flatrec-emb v1 <count> <dim>
//   key<TAB>f1<TAB>...<TAB>fd
// Keys resolve against the graph's user map first, then the item map; a key
// present in both maps is rejected as ambiguous. Every graph node must get
// exactly one row.
EmbeddingMatrix load_embeddings(std::istream& in, const BipartiteGraph& g, const std::string& source);
EmbeddingMatrix load_embeddings_file(const std::string& path, const BipartiteGraph& g);
void save_embeddings(std::ostream& out, const EmbeddingMatrix& m, const BipartiteGraph& g);
void save_embeddings_file(const std::string& path, const EmbeddingMatrix& m, const BipartiteGraph& g);

struct BprConfig {
    std::size_t dim = 64;
    int epochs = 30;
    double lr = 0.05;
    double reg = 1e-4;
    std::uint64_t seed = 42;
};

// Matrix-factorization pretrainer on the BPR pairwise objective:
// maximize log sigmoid(e_u.e_i - e_u.e_j) over observed items i against
// uniformly sampled non-interacted j. Single-threaded, deterministic per
// seed; epochs = 0 returns the seeded initialization unchanged.
EmbeddingMatrix pretrain_bpr(const BipartiteGraph& g,
                             const std::vector<InteractionRecord>& embed_set,
                             const BprConfig& cfg);

// Mean BPR loss -log sigmoid(e_u.e_i - e_u.e_j) over a fixed probe list.
double bpr_probe_loss(const EmbeddingMatrix& m,
                      const std::vector<std::array<NodeId, 3>>& probes);

}  // namespace flatrec
