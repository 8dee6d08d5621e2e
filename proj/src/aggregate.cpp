#include "flatrec/aggregate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "flatrec/binio.hpp"
#include "flatrec/error.hpp"

namespace flatrec {

AggregatedLayer aggregate_layer(std::span<const NodeId> members, const EmbeddingMatrix& emb) {
    AggregatedLayer out;
    out.values.assign(emb.dim(), 0.0f);
    if (members.empty()) {
        out.empty = true;
        return out;
    }
    std::vector<double> acc(emb.dim(), 0.0);
    for (NodeId v : members) {
        auto r = emb.row(v);
        for (std::size_t j = 0; j < emb.dim(); ++j) acc[j] += static_cast<double>(r[j]);
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (std::size_t j = 0; j < emb.dim(); ++j) out.values[j] = static_cast<float>(acc[j] * inv);
    return out;
}

void aggregate_node(const SampledNeighborhood& sampled, const EmbeddingMatrix& emb,
                    LayerRepresentations& out) {
    for (int k = 0; k < out.layer_count(); ++k) {
        AggregatedLayer agg = aggregate_layer(sampled.layers[static_cast<std::size_t>(k)], emb);
        auto dst = out.layer_mut(sampled.root, k);
        std::copy(agg.values.begin(), agg.values.end(), dst.begin());
        out.set_layer_empty(sampled.root, k, agg.empty);
    }
}

LayerRepresentations precompute_all(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                    const MeanEmbedding& mean, const SamplerConfig& cfg, int K,
                                    int workers) {
    if (K < 1) throw Error("K must be >= 1");
    if (workers < 1) throw Error("workers must be >= 1");
    if (emb.rows() != g.n_nodes()) throw Error("embedding rows do not match graph nodes");

    LayerRepresentations out(g.n_nodes(), emb.dim(), K);
    const std::size_t n = g.n_nodes();
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex error_mu;

    // The candidate-side penalty of the infomax score is root-independent;
    // tabulating it once removes half the dot products from the hot path.
    std::optional<InfomaxScorer> scorer;
    if (cfg.kind == SamplerKind::Infomax) scorer.emplace(emb, mean);

    auto run = [&]() {
        constexpr std::size_t kChunk = 64;
        for (;;) {
            std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n || failed.load(std::memory_order_relaxed)) return;
            std::size_t end = std::min(begin + kChunk, n);
            for (std::size_t v = begin; v < end; ++v) {
                try {
                    auto sampled = sample_neighborhood(g, emb, mean, static_cast<NodeId>(v), K, cfg,
                                                       scorer ? &*scorer : nullptr);
                    aggregate_node(sampled, emb, out);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!failed.exchange(true))
                        error_msg = "precompute failed at node " + g.node_key(static_cast<NodeId>(v)) +
                                    ": " + e.what();
                    return;
                }
            }
        }
    };

    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error(error_msg);
    return out;
}

namespace {
constexpr char kReprMagic[5] = "FLTR";
constexpr std::uint32_t kReprVersion = 1;
}  // namespace

void save_reprs(const LayerRepresentations& reprs, const std::string& path) {
    BinWriter w(path);
    w.magic(kReprMagic);
    w.u32(kReprVersion);
    w.u64(reprs.n_nodes());
    w.u32(static_cast<std::uint32_t>(reprs.dim()));
    w.u32(static_cast<std::uint32_t>(reprs.K()));
    for (float x : reprs.data()) w.f32(x);
    w.bytes(reprs.empty_flags().data(), reprs.empty_flags().size());
    w.close();
}

LayerRepresentations load_reprs(const std::string& path, std::optional<int> expect_K) {
    BinReader r(path);
    r.expect_magic(kReprMagic, "layer-representations");
    std::uint32_t version = r.u32();
    if (version != kReprVersion)
        throw VersionError(path + ": unsupported representation file version " +
                           std::to_string(version));
    std::uint64_t n_nodes = r.u64();
    std::uint32_t dim = r.u32();
    std::uint32_t k = r.u32();
    if (expect_K && static_cast<int>(k) != *expect_K)
        throw MismatchError(path + ": built for K=" + std::to_string(k) + ", config expects K=" +
                            std::to_string(*expect_K));

    LayerRepresentations out(n_nodes, dim, static_cast<int>(k));
    for (std::size_t i = 0; i < n_nodes; ++i) {
        for (int layer = 0; layer <= static_cast<int>(k); ++layer) {
            auto dst = out.layer_mut(static_cast<NodeId>(i), layer);
            for (std::size_t j = 0; j < dim; ++j) dst[j] = r.f32();
        }
    }
    std::vector<std::uint8_t> flags(n_nodes * (static_cast<std::size_t>(k) + 1));
    r.bytes(flags.data(), flags.size());
    for (std::size_t i = 0; i < n_nodes; ++i)
        for (int layer = 0; layer <= static_cast<int>(k); ++layer)
            out.set_layer_empty(static_cast<NodeId>(i), layer,
                                flags[i * (k + 1) + static_cast<std::size_t>(layer)] != 0);
    return out;
}

}  // namespace flatrec
