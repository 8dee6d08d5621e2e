#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "flatrec/embedding.hpp"
#include "flatrec/error.hpp"
#include "flatrec/rng.hpp"
#include "flatrec/synth.hpp"
#include "oracles.hpp"

using namespace flatrec;

namespace {

BipartiteGraph two_node_graph() { return BipartiteGraph::build({{"uA", "i1", 1.0}}); }

}  // namespace

TEST_CASE("load_embeddings aligns rows to unified ids") {
    auto g = two_node_graph();
    std::istringstream in(
        "flatrec-emb v1 2 4\n"
        "i1\t5\t6\t7\t8\n"
        "uA\t1\t2\t3\t4\n");
    auto m = load_embeddings(in, g, "emb");
    CHECK(m.rows() == 2);
    CHECK(m.dim() == 4);
    CHECK(m.row(0)[0] == 1.0f);
    CHECK(m.row(1)[3] == 8.0f);
}

TEST_CASE("load_embeddings error contracts") {
    auto g = two_node_graph();
    SUBCASE("missing node named in the error") {
        std::istringstream in("flatrec-emb v1 2 2\nuA\t1\t2\n");
        CHECK_THROWS_WITH_AS(load_embeddings(in, g, "emb"), "emb: missing embedding: i1",
                             ParseError);
    }
    SUBCASE("duplicate row") {
        std::istringstream in("flatrec-emb v1 2 2\nuA\t1\t2\nuA\t3\t4\n");
        CHECK_THROWS_AS(load_embeddings(in, g, "emb"), ParseError);
    }
    SUBCASE("dimension mismatch at first bad row") {
        std::istringstream in("flatrec-emb v1 2 8\nuA\t1\t2\t3\t4\t5\t6\t7\t8\ni1\t1\t2\n");
        try {
            load_embeddings(in, g, "emb");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
            CHECK(std::string(e.what()).find("i1") != std::string::npos);
        }
    }
    SUBCASE("unknown key") {
        std::istringstream in("flatrec-emb v1 2 2\nuA\t1\t2\nzz\t3\t4\n");
        CHECK_THROWS_AS(load_embeddings(in, g, "emb"), ParseError);
    }
    SUBCASE("bad header") {
        std::istringstream in("something else\n");
        CHECK_THROWS_AS(load_embeddings(in, g, "emb"), ParseError);
    }
}

TEST_CASE("embedding save/load round-trips bitwise") {
    Rng rng(31);
    auto g = BipartiteGraph::build(oracles::random_records(rng, 5, 7, 0.4));
    auto m = oracles::random_embeddings(rng, g.n_nodes(), 8);
    std::stringstream buf;
    save_embeddings(buf, m, g);
    auto back = load_embeddings(buf, g, "roundtrip");
    CHECK(back.data() == m.data());
}

TEST_CASE("mean_embedding basics") {
    EmbeddingMatrix m(2, 2);
    m.row_mut(0)[0] = 1.0f;
    m.row_mut(1)[1] = 1.0f;
    auto mean = mean_embedding(m);
    CHECK(mean[0] == doctest::Approx(0.5));
    CHECK(mean[1] == doctest::Approx(0.5));

    EmbeddingMatrix single(1, 2);
    single.row_mut(0)[0] = 3.0f;
    single.row_mut(0)[1] = 3.0f;
    auto one = mean_embedding(single);
    CHECK(one[0] == 3.0);
    CHECK(one[1] == 3.0);
}

TEST_CASE("mean_embedding matches the compensated-summation oracle") {
    Rng rng(99);
    EmbeddingMatrix m(1000, 16);
    std::vector<std::vector<double>> rows;
    for (std::size_t v = 0; v < 1000; ++v) {
        std::vector<double> row;
        for (float& x : m.row_mut(static_cast<NodeId>(v))) {
            x = static_cast<float>(rng.uniform_real(-10.0, 10.0));
            row.push_back(static_cast<double>(x));
        }
        rows.push_back(std::move(row));
    }
    auto mean = mean_embedding(m);
    auto oracle = oracles::compensated_mean(rows);
    for (std::size_t j = 0; j < 16; ++j)
        CHECK(mean[j] == doctest::Approx(oracle[j]).epsilon(1e-6));
}

TEST_CASE("mean of identical rows is exact") {
    EmbeddingMatrix m(37, 3);
    for (std::size_t v = 0; v < 37; ++v) {
        m.row_mut(static_cast<NodeId>(v))[0] = 1.25f;
        m.row_mut(static_cast<NodeId>(v))[1] = -0.5f;
        m.row_mut(static_cast<NodeId>(v))[2] = 8.0f;
    }
    auto mean = mean_embedding(m);
    CHECK(mean[0] == 1.25);
    CHECK(mean[1] == -0.5);
    CHECK(mean[2] == 8.0);
}

TEST_CASE("mean_embedding rejects an empty matrix") {
    EmbeddingMatrix empty;
    CHECK_THROWS_AS(mean_embedding(empty), Error);
}

namespace {

struct PlantedFixture {
    std::vector<InteractionRecord> records;
    BipartiteGraph g;
    PlantedConfig cfg;

    explicit PlantedFixture(std::uint64_t seed) {
        cfg.n_users = 60;
        cfg.n_items = 60;
        cfg.interactions_per_user = 12;
        cfg.within = 0.9;
        cfg.seed = seed;
        records = planted_block_dataset(cfg);
        g = BipartiteGraph::build(records);
    }

    // Mean user-item embedding dot product within vs across blocks.
    std::pair<double, double> block_affinity(const EmbeddingMatrix& m) const {
        double within_sum = 0.0, cross_sum = 0.0;
        std::size_t within_n = 0, cross_n = 0;
        for (std::size_t u = 0; u < g.n_users(); ++u) {
            auto ukey = g.node_key(static_cast<NodeId>(u));
            std::size_t uidx = std::stoul(ukey.substr(1));
            for (std::size_t i = 0; i < g.n_items(); ++i) {
                NodeId item = static_cast<NodeId>(g.n_users() + i);
                std::size_t iidx = std::stoul(g.node_key(item).substr(1));
                double d = dot(m.row(static_cast<NodeId>(u)), m.row(item));
                if (planted_user_block(cfg, uidx) == planted_item_block(cfg, iidx)) {
                    within_sum += d;
                    ++within_n;
                } else {
                    cross_sum += d;
                    ++cross_n;
                }
            }
        }
        return {within_sum / static_cast<double>(within_n),
                cross_sum / static_cast<double>(cross_n)};
    }
};

}  // namespace

TEST_CASE("BPR separates planted blocks across seeds") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        PlantedFixture fx(seed);
        BprConfig cfg;
        cfg.dim = 16;
        cfg.epochs = 20;
        cfg.seed = seed;
        auto m = pretrain_bpr(fx.g, fx.records, cfg);
        auto [within, cross] = fx.block_affinity(m);
        CHECK(within > cross);
    }
}

TEST_CASE("BPR with zero epochs returns the seeded init unchanged") {
    PlantedFixture fx(4);
    BprConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 0;
    cfg.seed = 11;
    auto a = pretrain_bpr(fx.g, fx.records, cfg);
    auto b = pretrain_bpr(fx.g, fx.records, cfg);
    CHECK(a.data() == b.data());
    // init bound is 0.1/sqrt(d)
    for (float x : a.data()) CHECK(std::abs(x) <= 0.1 / std::sqrt(8.0) + 1e-9);
}

TEST_CASE("BPR is bitwise deterministic per seed") {
    PlantedFixture fx(5);
    BprConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 5;
    cfg.seed = 3;
    auto a = pretrain_bpr(fx.g, fx.records, cfg);
    auto b = pretrain_bpr(fx.g, fx.records, cfg);
    CHECK(a.data() == b.data());
    cfg.seed = 4;
    auto c = pretrain_bpr(fx.g, fx.records, cfg);
    CHECK(a.data() != c.data());
}

TEST_CASE("BPR probe loss is non-increasing across epochs within tolerance") {
    PlantedFixture fx(6);
    // Fixed probe batch: first positives with a deterministic fake negative.
    std::vector<std::array<NodeId, 3>> probes;
    Rng rng(17);
    auto pairs_seen = 0;
    for (const auto& r : fx.records) {
        auto u = fx.g.user_id(r.user);
        auto i = fx.g.item_id(r.item);
        NodeId j = static_cast<NodeId>(fx.g.n_users() + rng.uniform(fx.g.n_items()));
        probes.push_back({*u, *i, j});
        if (++pairs_seen == 200) break;
    }

    BprConfig cfg;
    cfg.dim = 16;
    cfg.seed = 21;
    double prev = 1e100;
    for (int epochs : {0, 5, 10, 20}) {
        cfg.epochs = epochs;
        auto m = pretrain_bpr(fx.g, fx.records, cfg);
        double loss = bpr_probe_loss(m, probes);
        CHECK(loss <= prev * 1.05);
        prev = loss;
    }
}

TEST_CASE("BPR rejects bad hyperparameters") {
    PlantedFixture fx(8);
    BprConfig cfg;
    cfg.dim = 0;
    CHECK_THROWS_AS(pretrain_bpr(fx.g, fx.records, cfg), Error);
    cfg.dim = 4;
    cfg.epochs = -1;
    CHECK_THROWS_AS(pretrain_bpr(fx.g, fx.records, cfg), Error);
    cfg.epochs = 1;
    CHECK_THROWS_AS(pretrain_bpr(fx.g, {}, cfg), Error);
}
