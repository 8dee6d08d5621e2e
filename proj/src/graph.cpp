#include "flatrec/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <queue>

#include "flatrec/error.hpp"
#include "flatrec/rng.hpp"

namespace flatrec {

BipartiteGraph BipartiteGraph::build(const std::vector<InteractionRecord>& records) {
    if (records.empty()) throw Error("cannot build graph from an empty record stream");

    BipartiteGraph g;
    // First-appearance id assignment, users before items (item ids get offset
    // by N once N is known).
    std::vector<std::string> user_keys, item_keys;
    std::unordered_map<std::string, NodeId> umap, imap;
    for (const auto& r : records) {
        if (r.weight <= 0.0) throw Error("interaction weight must be > 0");
        if (umap.emplace(r.user, static_cast<NodeId>(user_keys.size())).second)
            user_keys.push_back(r.user);
        if (imap.emplace(r.item, static_cast<NodeId>(item_keys.size())).second)
            item_keys.push_back(r.item);
    }
    g.n_users_ = user_keys.size();
    g.n_items_ = item_keys.size();

    // Merge duplicate edges by weight sum.
    std::unordered_map<std::uint64_t, double> edges;
    edges.reserve(records.size());
    for (const auto& r : records) {
        NodeId u = umap[r.user];
        NodeId i = static_cast<NodeId>(g.n_users_) + imap[r.item];
        edges[(static_cast<std::uint64_t>(u) << 32) | i] += r.weight;
    }

    const std::size_t n = g.n_nodes();
    std::vector<std::size_t> deg(n, 0);
    for (const auto& [key, w] : edges) {
        (void)w;
        ++deg[key >> 32];
        ++deg[key & 0xffffffffULL];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
    g.nbr_.resize(g.offsets_[n]);
    g.nbr_w_.resize(g.offsets_[n]);

    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [key, w] : edges) {
        NodeId u = static_cast<NodeId>(key >> 32);
        NodeId i = static_cast<NodeId>(key & 0xffffffffULL);
        g.nbr_[cursor[u]] = i;
        g.nbr_w_[cursor[u]++] = w;
        g.nbr_[cursor[i]] = u;
        g.nbr_w_[cursor[i]++] = w;
    }
    // Sort each adjacency list ascending by neighbor id.
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t lo = g.offsets_[v], hi = g.offsets_[v + 1];
        std::vector<std::pair<NodeId, double>> tmp;
        tmp.reserve(hi - lo);
        for (std::size_t e = lo; e < hi; ++e) tmp.emplace_back(g.nbr_[e], g.nbr_w_[e]);
        std::sort(tmp.begin(), tmp.end());
        for (std::size_t e = lo; e < hi; ++e) {
            g.nbr_[e] = tmp[e - lo].first;
            g.nbr_w_[e] = tmp[e - lo].second;
        }
    }

    g.user_ids_ = std::move(umap);
    g.item_ids_.reserve(imap.size());
    for (auto& [k, v] : imap) g.item_ids_.emplace(k, static_cast<NodeId>(g.n_users_) + v);
    g.keys_.resize(n);
    for (std::size_t u = 0; u < user_keys.size(); ++u) g.keys_[u] = std::move(user_keys[u]);
    for (std::size_t i = 0; i < item_keys.size(); ++i)
        g.keys_[g.n_users_ + i] = std::move(item_keys[i]);
    return g;
}

void BipartiteGraph::check_node(NodeId v) const {
    if (v >= n_nodes()) throw Error("invalid node id " + std::to_string(v));
}

std::span<const NodeId> BipartiteGraph::neighbors(NodeId v) const {
    check_node(v);
    return {nbr_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::span<const double> BipartiteGraph::neighbor_weights(NodeId v) const {
    check_node(v);
    return {nbr_w_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

double BipartiteGraph::edge_weight(NodeId a, NodeId b) const {
    auto ns = neighbors(a);
    auto it = std::lower_bound(ns.begin(), ns.end(), b);
    if (it == ns.end() || *it != b) return 0.0;
    return nbr_w_[offsets_[a] + static_cast<std::size_t>(it - ns.begin())];
}

std::vector<std::vector<NodeId>> BipartiteGraph::bfs_levels(NodeId root, int k) const {
    check_node(root);
    if (k < 0) throw Error("hop order must be >= 0");
    std::vector<std::vector<NodeId>> levels(static_cast<std::size_t>(k) + 1);
    std::vector<std::uint8_t> seen(n_nodes(), 0);
    seen[root] = 1;
    levels[0] = {root};
    for (int level = 1; level <= k; ++level) {
        auto& out = levels[level];
        for (NodeId v : levels[level - 1]) {
            for (NodeId w : neighbors(v)) {
                if (!seen[w]) {
                    seen[w] = 1;
                    out.push_back(w);
                }
            }
        }
        if (out.empty()) break;  // frontier exhausted; deeper levels stay empty
        std::sort(out.begin(), out.end());
    }
    return levels;
}

NeighborSet BipartiteGraph::neighbor_set(NodeId root, int k) const {
    auto levels = bfs_levels(root, k);
    NeighborSet s;
    s.root = root;
    s.order = k;
    s.members = std::move(levels[static_cast<std::size_t>(k)]);
    return s;
}

std::optional<NodeId> BipartiteGraph::user_id(const std::string& key) const {
    auto it = user_ids_.find(key);
    if (it == user_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeId> BipartiteGraph::item_id(const std::string& key) const {
    auto it = item_ids_.find(key);
    if (it == item_ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& BipartiteGraph::node_key(NodeId v) const {
    check_node(v);
    return keys_[v];
}

namespace {

bool blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

}  // namespace

std::vector<InteractionRecord> read_interactions(std::istream& in, const std::string& source) {
    std::vector<InteractionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank_or_comment(line)) continue;

        auto bad = [&](const std::string& what) {
            throw ParseError(source + ":" + std::to_string(lineno) + ": " + what);
        };
        std::size_t t1 = line.find('\t');
        if (t1 == std::string::npos) bad("missing item field");
        std::size_t t2 = line.find('\t', t1 + 1);
        InteractionRecord r;
        r.user = line.substr(0, t1);
        r.item = (t2 == std::string::npos) ? line.substr(t1 + 1) : line.substr(t1 + 1, t2 - t1 - 1);
        if (r.user.empty()) bad("missing user field");
        if (r.item.empty()) bad("missing item field");
        if (t2 != std::string::npos) {
            std::string ws = line.substr(t2 + 1);
            char* end = nullptr;
            r.weight = std::strtod(ws.c_str(), &end);
            if (ws.empty() || end != ws.c_str() + ws.size()) bad("malformed weight '" + ws + "'");
            if (!(r.weight > 0.0)) bad("weight must be > 0, got " + ws);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<InteractionRecord> read_interactions_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open interactions file: " + path);
    return read_interactions(in, path);
}

void write_interactions_file(const std::string& path, const std::vector<InteractionRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.weight);
        out << r.user << '\t' << r.item << '\t' << buf << '\n';
    }
    if (!out) throw Error("write failed: " + path);
}

SplitResult split_dataset(const std::vector<InteractionRecord>& records,
                          const std::array<double, 3>& ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error("split ratios must sum to 1, got " + std::to_string(sum));
    for (double r : ratios)
        if (r < 0.0) throw Error("split ratios must be non-negative");

    const std::size_t n = records.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    auto cut = [&](double c) {
        auto v = static_cast<std::size_t>(std::llround(c * static_cast<double>(n)));
        return std::min(v, n);
    };
    std::size_t c1 = cut(ratios[0]);
    std::size_t c2 = std::max(c1, cut(ratios[0] + ratios[1]));

    SplitResult out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[idx[i]];
        if (i < c1)
            out.embed_set.push_back(r);
        else if (i < c2)
            out.model_set.push_back(r);
        else
            out.test_set.push_back(r);
    }
    return out;
}

}  // namespace flatrec
