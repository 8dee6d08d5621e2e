#include "flatrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "flatrec/error.hpp"

namespace flatrec {

namespace detail {

std::vector<RankedUser> resolve_test_users(const BipartiteGraph& g,
                                           const std::vector<InteractionRecord>& test_set,
                                           std::size_t& skipped) {
    if (test_set.empty()) throw Error("test set is empty");
    skipped = 0;

    // user id -> distinct reachable test items; unknown keys and items the
    // user already trained on drop out here.
    std::map<NodeId, std::set<NodeId>> per_user;
    std::set<NodeId> users_seen;
    std::set<std::string> unknown_users;
    for (const auto& r : test_set) {
        auto u = g.user_id(r.user);
        if (!u) {  // user never appeared in training data; cannot be ranked
            unknown_users.insert(r.user);
            continue;
        }
        users_seen.insert(*u);
        auto i = g.item_id(r.item);
        if (!i) continue;
        auto excl = g.neighbors(*u);
        if (std::binary_search(excl.begin(), excl.end(), *i)) continue;  // trained on
        per_user[*u].insert(*i);
    }
    skipped = users_seen.size() - per_user.size() + unknown_users.size();

    std::vector<RankedUser> out;
    out.reserve(per_user.size());
    for (auto& [u, items] : per_user) {
        RankedUser ru;
        ru.user = u;
        ru.test_items.assign(items.begin(), items.end());
        out.push_back(std::move(ru));
    }
    return out;
}

UserMetrics metrics_for_ranking(NodeId user, const std::vector<NodeId>& topk,
                                const std::vector<NodeId>& test_items, int cutoff) {
    UserMetrics m;
    m.user = user;
    m.n_test_items = test_items.size();

    std::size_t hits = 0;
    double dcg = 0.0;
    for (std::size_t pos = 0; pos < topk.size(); ++pos) {
        if (std::binary_search(test_items.begin(), test_items.end(), topk[pos])) {
            ++hits;
            dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
        }
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min<std::size_t>(cutoff, test_items.size());
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);

    m.precision = static_cast<double>(hits) / static_cast<double>(cutoff);
    m.recall = static_cast<double>(hits) / static_cast<double>(test_items.size());
    m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
    return m;
}

}  // namespace detail

EvalReport full_rank_evaluate(const ModelParams& model, const LayerRepresentations& reprs,
                              const BipartiteGraph& g,
                              const std::vector<InteractionRecord>& test_set,
                              const EvalConfig& cfg) {
    if (reprs.n_nodes() != g.n_nodes()) throw Error("representations do not match graph nodes");
    const std::size_t layers = static_cast<std::size_t>(reprs.layer_count());
    if (model.input_dim() != layers * layers)
        throw Error("model input dim does not match (K+1)^2 of the representations");

    auto scorer = [&](NodeId u, NodeId item) {
        CrossFeatures f = cross_features(reprs, u, reprs, item);
        return forward(model, f.values);
    };
    return full_rank_evaluate_with(scorer, g, test_set, cfg);
}

void write_report_csv(const std::string& path, const std::string& label, std::uint64_t seed,
                      const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "label,seed,cutoff,users_evaluated,users_skipped,precision,recall,ndcg\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%zu,%zu,%.17g,%.17g,%.17g", label.c_str(),
                  static_cast<unsigned long long>(seed), report.cutoff, report.users_evaluated,
                  report.users_skipped, report.precision, report.recall, report.ndcg);
    out << buf << '\n';
    if (!out) throw Error("write failed: " + path);
}

void write_per_user_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "user,n_test_items,precision,recall,ndcg\n";
    char buf[160];
    for (const auto& m : report.per_user) {
        std::snprintf(buf, sizeof(buf), "%u,%zu,%.17g,%.17g,%.17g", m.user, m.n_test_items,
                      m.precision, m.recall, m.ndcg);
        out << buf << '\n';
    }
    if (!out) throw Error("write failed: " + path);
}

}  // namespace flatrec
