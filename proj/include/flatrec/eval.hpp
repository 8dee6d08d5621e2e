#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "flatrec/error.hpp"
#include "flatrec/model.hpp"

namespace flatrec {

struct UserMetrics {
    NodeId user = 0;
    double precision = 0.0;
    double recall = 0.0;
    double ndcg = 0.0;
    std::size_t n_test_items = 0;
};

struct EvalReport {
    int cutoff = 20;
    double precision = 0.0;  // macro means over evaluated users
    double recall = 0.0;
    double ndcg = 0.0;
    std::size_t users_evaluated = 0;
    std::size_t users_skipped = 0;  // no reachable test items or no candidates
    std::vector<UserMetrics> per_user;
};

struct EvalConfig {
    int cutoff = 20;
    int workers = 1;
};

// Full-rank protocol: for every test user, scores all items except the ones
// the user interacted with during training (the graph's edges), ranks by
// descending score with ties broken by ascending item id, and macro-averages
// PRE@K, REC@K and binary-gain NDCG@K (log base 2, IDCG over
// min(K, |test items|)). Test records whose user/item never appeared in
// training are skipped and counted.
EvalReport full_rank_evaluate(const ModelParams& model, const LayerRepresentations& reprs,
                              const BipartiteGraph& g,
                              const std::vector<InteractionRecord>& test_set,
                              const EvalConfig& cfg);

// Same protocol with an arbitrary scorer; lets tests rank with synthetic or
// random score functions. scorer(u, item_id) -> score.
template <typename Scorer>
EvalReport full_rank_evaluate_with(Scorer&& scorer, const BipartiteGraph& g,
                                   const std::vector<InteractionRecord>& test_set,
                                   const EvalConfig& cfg);

void write_report_csv(const std::string& path, const std::string& label, std::uint64_t seed,
                      const EvalReport& report);
void write_per_user_csv(const std::string& path, const EvalReport& report);

// Implementation details shared by both evaluate entry points.
namespace detail {

struct RankedUser {
    NodeId user;
    std::vector<NodeId> test_items;  // reachable test items, ascending
};

// Maps test records onto graph ids and drops users with no reachable test
// item, returning the skip count (users whose entire test set is unknown or
// already excluded).
std::vector<RankedUser> resolve_test_users(const BipartiteGraph& g,
                                           const std::vector<InteractionRecord>& test_set,
                                           std::size_t& skipped);

UserMetrics metrics_for_ranking(NodeId user, const std::vector<NodeId>& topk,
                                const std::vector<NodeId>& test_items, int cutoff);

}  // namespace detail

template <typename Scorer>
EvalReport full_rank_evaluate_with(Scorer&& scorer, const BipartiteGraph& g,
                                   const std::vector<InteractionRecord>& test_set,
                                   const EvalConfig& cfg) {
    if (cfg.cutoff < 1) throw Error("cutoff must be >= 1");
    std::size_t skipped = 0;
    auto users = detail::resolve_test_users(g, test_set, skipped);

    EvalReport report;
    report.cutoff = cfg.cutoff;
    report.users_skipped = skipped;
    report.per_user.resize(users.size());

    const NodeId item_base = static_cast<NodeId>(g.n_users());
    const std::size_t n_items = g.n_items();

    auto eval_user = [&](std::size_t slot) {
        const auto& ru = users[slot];
        auto excl = g.neighbors(ru.user);

        struct Scored {
            double score;
            NodeId item;
        };
        std::vector<Scored> cand;
        cand.reserve(n_items - excl.size());
        std::size_t e = 0;
        for (std::size_t j = 0; j < n_items; ++j) {
            NodeId item = item_base + static_cast<NodeId>(j);
            while (e < excl.size() && excl[e] < item) ++e;
            if (e < excl.size() && excl[e] == item) continue;
            cand.push_back({scorer(ru.user, item), item});
        }
        auto better = [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.item < b.item;
        };
        const std::size_t k = std::min<std::size_t>(cfg.cutoff, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                          better);
        std::vector<NodeId> topk;
        topk.reserve(k);
        for (std::size_t r = 0; r < k; ++r) topk.push_back(cand[r].item);
        report.per_user[slot] = detail::metrics_for_ranking(ru.user, topk, ru.test_items, cfg.cutoff);
    };

    if (cfg.workers <= 1 || users.size() < 2) {
        for (std::size_t s = 0; s < users.size(); ++s) eval_user(s);
    } else {
        std::atomic<std::size_t> next{0};
        auto run = [&]() {
            for (;;) {
                std::size_t s = next.fetch_add(1);
                if (s >= users.size()) return;
                eval_user(s);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < cfg.workers; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }

    double sp = 0.0, sr = 0.0, sn = 0.0;
    for (const auto& m : report.per_user) {
        sp += m.precision;
        sr += m.recall;
        sn += m.ndcg;
    }
    report.users_evaluated = report.per_user.size();
    if (report.users_evaluated > 0) {
        report.precision = sp / static_cast<double>(report.users_evaluated);
        report.recall = sr / static_cast<double>(report.users_evaluated);
        report.ndcg = sn / static_cast<double>(report.users_evaluated);
    }
    return report;
}

}  // namespace flatrec
