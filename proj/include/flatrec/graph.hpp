#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace flatrec {

using NodeId = std::uint32_t;

// One observed user-item interaction. Duplicate (user, item) pairs are legal
// in input files and merge by weight sum at graph construction.
struct InteractionRecord {
    std::string user;
    std::string item;
    double weight = 1.0;
};

// Nodes at exactly BFS level `order` from `root`. Level 0 is {root}; higher
// levels exclude the root and every lower level, so for a user root the even
// levels hold users and the odd levels hold items.
struct NeighborSet {
    NodeId root = 0;
    int order = 0;
    std::vector<NodeId> members;  // ascending node ids
};

// Immutable user-item bipartite graph over a unified id space:
// users occupy ids 0..N-1, items N..N+M-1. Adjacency is stored CSR-style,
// symmetric, with neighbor lists strictly ascending. Safe for unrestricted
// concurrent reads once built.
class BipartiteGraph {
public:
    // Merges duplicate pairs by summing weights. Ids are assigned by first
    // appearance in `records`, users before items. Throws on empty input.
    static BipartiteGraph build(const std::vector<InteractionRecord>& records);

    std::size_t n_users() const { return n_users_; }
    std::size_t n_items() const { return n_items_; }
    std::size_t n_nodes() const { return n_users_ + n_items_; }
    std::size_t n_edges() const { return nbr_.size() / 2; }

    bool is_user(NodeId v) const { return v < n_users_; }
    bool is_item(NodeId v) const { return v >= n_users_ && v < n_nodes(); }

    std::span<const NodeId> neighbors(NodeId v) const;
    std::span<const double> neighbor_weights(NodeId v) const;
    double edge_weight(NodeId a, NodeId b) const;  // 0 if absent
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }

    // Nodes grouped by BFS level 0..k (levels past the reachable frontier are
    // empty). Each level is ascending by id.
    std::vector<std::vector<NodeId>> bfs_levels(NodeId root, int k) const;

    NeighborSet neighbor_set(NodeId root, int k) const;

    std::optional<NodeId> user_id(const std::string& key) const;
    std::optional<NodeId> item_id(const std::string& key) const;
    const std::string& node_key(NodeId v) const;

private:
    std::size_t n_users_ = 0;
    std::size_t n_items_ = 0;
    std::vector<std::size_t> offsets_;  // n_nodes+1
    std::vector<NodeId> nbr_;
    std::vector<double> nbr_w_;
    std::unordered_map<std::string, NodeId> user_ids_;
    std::unordered_map<std::string, NodeId> item_ids_;  // value is unified id
    std::vector<std::string> keys_;                     // per unified id

    void check_node(NodeId v) const;
};

// Parses the tab-separated interaction format: `user<TAB>item[<TAB>weight]`,
// weight defaulting to 1.0. Lines whose first non-blank byte is '#' and blank
// lines are skipped. Malformed lines raise ParseError naming `source`:line.
std::vector<InteractionRecord> read_interactions(std::istream& in, const std::string& source);
std::vector<InteractionRecord> read_interactions_file(const std::string& path);
void write_interactions_file(const std::string& path, const std::vector<InteractionRecord>& records);

struct SplitResult {
    std::vector<InteractionRecord> embed_set;
    std::vector<InteractionRecord> model_set;
    std::vector<InteractionRecord> test_set;
};

// Uniform random record-level partition, deterministic for a fixed seed.
// Ratios must sum to 1 within 1e-9. Part sizes are the rounded cumulative
// boundaries, so 100 records at (0.65, 0.15, 0.20) give exactly (65, 15, 20).
SplitResult split_dataset(const std::vector<InteractionRecord>& records,
                          const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace flatrec
