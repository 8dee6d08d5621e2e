#include "flatrec/embedding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "flatrec/error.hpp"
#include "flatrec/rng.hpp"

namespace flatrec {

MeanEmbedding mean_embedding(const EmbeddingMatrix& m) {
    if (m.rows() == 0) throw Error("mean_embedding of an empty matrix");
    MeanEmbedding mean(m.dim(), 0.0);
    for (std::size_t v = 0; v < m.rows(); ++v) {
        auto r = m.row(static_cast<NodeId>(v));
        for (std::size_t j = 0; j < m.dim(); ++j) mean[j] += static_cast<double>(r[j]);
    }
    for (double& x : mean) x /= static_cast<double>(m.rows());
    return mean;
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    return s;
}

double dot(std::span<const float> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * b[j];
    return s;
}

EmbeddingMatrix load_embeddings(std::istream& in, const BipartiteGraph& g, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    auto bad = [&](const std::string& what) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": " + what);
    };

    ++lineno;
    if (!std::getline(in, line)) bad("missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hs(line);
    std::string tag, ver;
    std::size_t count = 0, dim = 0;
    if (!(hs >> tag >> ver >> count >> dim) || tag != "flatrec-emb" || ver != "v1")
        bad("expected header 'flatrec-emb v1 <count> <dim>'");
    if (count != g.n_nodes())
        bad("row count " + std::to_string(count) + " does not match graph with " +
            std::to_string(g.n_nodes()) + " nodes");
    if (dim == 0) bad("dimension must be >= 1");

    EmbeddingMatrix m(g.n_nodes(), dim);
    std::vector<std::uint8_t> filled(g.n_nodes(), 0);

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::size_t t = line.find('\t');
        if (t == std::string::npos) bad("missing embedding values");
        std::string key = line.substr(0, t);

        auto uid = g.user_id(key);
        auto iid = g.item_id(key);
        if (uid && iid) bad("ambiguous key (both user and item): " + key);
        if (!uid && !iid) bad("unknown key: " + key);
        NodeId node = uid ? *uid : *iid;
        if (filled[node]) bad("duplicate embedding: " + key);
        filled[node] = 1;

        auto row = m.row_mut(node);
        std::size_t pos = t + 1, got = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find('\t', pos);
            std::string tok = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (tok.empty() || end != tok.c_str() + tok.size()) bad("malformed value '" + tok + "'");
            if (!std::isfinite(v)) bad("non-finite value in row for " + key);
            if (got >= dim) bad("dimension mismatch for " + key + ": more than " + std::to_string(dim) + " values");
            row[got++] = static_cast<float>(v);
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (got != dim)
            bad("dimension mismatch for " + key + ": got " + std::to_string(got) + ", expected " +
                std::to_string(dim));
    }

    for (std::size_t v = 0; v < g.n_nodes(); ++v)
        if (!filled[v]) throw ParseError(source + ": missing embedding: " + g.node_key(static_cast<NodeId>(v)));
    return m;
}

EmbeddingMatrix load_embeddings_file(const std::string& path, const BipartiteGraph& g) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embeddings file: " + path);
    return load_embeddings(in, g, path);
}

void save_embeddings(std::ostream& out, const EmbeddingMatrix& m, const BipartiteGraph& g) {
    if (m.rows() != g.n_nodes()) throw Error("embedding row count does not match graph");
    out << "flatrec-emb v1 " << m.rows() << ' ' << m.dim() << '\n';
    char buf[48];
    for (std::size_t v = 0; v < m.rows(); ++v) {
        out << g.node_key(static_cast<NodeId>(v));
        for (float x : m.row(static_cast<NodeId>(v))) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(x));
            out << '\t' << buf;
        }
        out << '\n';
    }
}

void save_embeddings_file(const std::string& path, const EmbeddingMatrix& m, const BipartiteGraph& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    save_embeddings(out, m, g);
    if (!out) throw Error("write failed: " + path);
}

namespace {

inline double log_sigmoid(double x) {
    // -softplus(-x), stable on both tails
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

EmbeddingMatrix pretrain_bpr(const BipartiteGraph& g,
                             const std::vector<InteractionRecord>& embed_set,
                             const BprConfig& cfg) {
    if (cfg.dim == 0) throw Error("pretrain dim must be >= 1");
    if (cfg.epochs < 0) throw Error("pretrain epochs must be >= 0");
    if (embed_set.empty()) throw Error("pretrain requires a non-empty embed set");

    Rng rng(fork_seed(cfg.seed, 0x62707221ULL));  // init stream
    EmbeddingMatrix m(g.n_nodes(), cfg.dim);
    const double scale = 0.1 / std::sqrt(static_cast<double>(cfg.dim));
    for (std::size_t v = 0; v < g.n_nodes(); ++v)
        for (float& x : m.row_mut(static_cast<NodeId>(v)))
            x = static_cast<float>(rng.uniform_real(-scale, scale));

    // Resolve records to unified ids; positives per user for negative rejection.
    std::vector<std::pair<NodeId, NodeId>> pos;
    pos.reserve(embed_set.size());
    std::vector<std::unordered_set<NodeId>> seen(g.n_users());
    for (const auto& r : embed_set) {
        auto u = g.user_id(r.user);
        auto i = g.item_id(r.item);
        if (!u || !i) throw Error("embed set references a node absent from the graph: " + r.user + "/" + r.item);
        if (seen[*u].insert(*i).second) pos.emplace_back(*u, *i);
    }

    const std::size_t d = cfg.dim;
    const NodeId item_base = static_cast<NodeId>(g.n_users());
    const auto n_items = static_cast<std::uint64_t>(g.n_items());
    std::vector<double> eu(d);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng(fork_seed(cfg.seed, 0x65706f63ULL, static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order(pos.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        erng.shuffle(order);

        for (std::size_t idx : order) {
            auto [u, i] = pos[idx];
            NodeId j = 0;
            bool found = false;
            for (int tries = 0; tries < 64; ++tries) {
                j = item_base + static_cast<NodeId>(erng.uniform(n_items));
                if (!seen[u].count(j)) {
                    found = true;
                    break;
                }
            }
            if (!found) continue;  // user interacted with nearly every item

            auto ru = m.row_mut(u), ri = m.row_mut(i), rj = m.row_mut(j);
            double x = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                eu[t] = static_cast<double>(ru[t]);
                x += eu[t] * (static_cast<double>(ri[t]) - static_cast<double>(rj[t]));
            }
            const double gsig = 1.0 / (1.0 + std::exp(x));  // sigmoid(-x)
            for (std::size_t t = 0; t < d; ++t) {
                const double di = static_cast<double>(ri[t]);
                const double dj = static_cast<double>(rj[t]);
                ru[t] = static_cast<float>(eu[t] + cfg.lr * (gsig * (di - dj) - cfg.reg * eu[t]));
                ri[t] = static_cast<float>(di + cfg.lr * (gsig * eu[t] - cfg.reg * di));
                rj[t] = static_cast<float>(dj + cfg.lr * (-gsig * eu[t] - cfg.reg * dj));
            }
        }
    }
    for (float x : m.data())
        if (!std::isfinite(x))
            throw Error("pretraining diverged (non-finite embedding); lower pretrain.lr");
    return m;
}

double bpr_probe_loss(const EmbeddingMatrix& m,
                      const std::vector<std::array<NodeId, 3>>& probes) {
    if (probes.empty()) throw Error("empty probe list");
    double loss = 0.0;
    for (const auto& [u, i, j] : probes) {
        double x = dot(m.row(u), m.row(i)) - dot(m.row(u), m.row(j));
        loss -= log_sigmoid(x);
    }
    return loss / static_cast<double>(probes.size());
}

}  // namespace flatrec
