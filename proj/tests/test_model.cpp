#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "flatrec/error.hpp"
#include "flatrec/model.hpp"
#include "flatrec/rng.hpp"
#include "flatrec/synth.hpp"
#include "oracles.hpp"

using namespace flatrec;

namespace {

// A tiny LayerRepresentations with hand-set vectors.
LayerRepresentations hand_reprs(std::size_t n_nodes, std::size_t dim, int K,
                                const std::vector<std::vector<float>>& values) {
    LayerRepresentations r(n_nodes, dim, K);
    std::size_t idx = 0;
    for (std::size_t v = 0; v < n_nodes; ++v) {
        for (int k = 0; k <= K; ++k) {
            auto dst = r.layer_mut(static_cast<NodeId>(v), k);
            for (std::size_t j = 0; j < dim; ++j) dst[j] = values[idx][j];
            ++idx;
        }
    }
    return r;
}

ModelParams random_params(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
    return ModelParams::init(sizes, seed);
}

}  // namespace

TEST_CASE("cross_features produces the (K+1)^2 grid in row-major order") {
    // node 0: layers [1,0],[0,1],[2,0]; node 1: layers [1,1],[3,0],[0,4]
    auto reprs = hand_reprs(2, 2, 2,
                            {{1, 0}, {0, 1}, {2, 0}, {1, 1}, {3, 0}, {0, 4}});
    auto f = cross_features(reprs, 0, reprs, 1);
    REQUIRE(f.values.size() == 9);
    // row i = user layer, col j = item layer
    CHECK(f.values[0] == doctest::Approx(1.0));   // [1,0].[1,1]
    CHECK(f.values[1] == doctest::Approx(3.0));   // [1,0].[3,0]
    CHECK(f.values[2] == doctest::Approx(0.0));   // [1,0].[0,4]
    CHECK(f.values[3] == doctest::Approx(1.0));   // [0,1].[1,1]
    CHECK(f.values[4] == doctest::Approx(0.0));   // [0,1].[3,0]
    CHECK(f.values[5] == doctest::Approx(4.0));   // [0,1].[0,4]
    CHECK(f.values[6] == doctest::Approx(2.0));   // [2,0].[1,1]
    CHECK(f.values[7] == doctest::Approx(6.0));   // [2,0].[3,0]
    CHECK(f.values[8] == doctest::Approx(0.0));   // [2,0].[0,4]
}

TEST_CASE("cross_features of all-zero reps is all zero") {
    LayerRepresentations reprs(2, 3, 2);
    auto f = cross_features(reprs, 0, reprs, 1);
    for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("cross feature (0,0) is the raw embedding dot product") {
    Rng rng(5150);
    auto g = BipartiteGraph::build({{"u", "i", 1.0}});
    auto emb = oracles::random_embeddings(rng, 2, 6);
    auto mean = mean_embedding(emb);
    SamplerConfig cfg;
    cfg.budgets = {2, 2};
    auto reprs = precompute_all(g, emb, mean, cfg, 2, 1);
    auto f = cross_features(reprs, 0, reprs, 1);
    CHECK(f.values[0] == doctest::Approx(dot(emb.row(0), emb.row(1))).epsilon(1e-6));
}

TEST_CASE("transposing the feature grid mirrors user/item swap") {
    Rng rng(61);
    auto reprs = hand_reprs(2, 3, 2,
                            {{1, 2, 3}, {0, 1, 0}, {2, 2, 2}, {4, 0, 1}, {1, 1, 1}, {0, 5, 0}});
    auto uv = cross_features(reprs, 0, reprs, 1);
    auto vu = cross_features(reprs, 1, reprs, 0);
    const int layers = 3;
    for (int i = 0; i < layers; ++i)
        for (int j = 0; j < layers; ++j)
            CHECK(uv.values[i * layers + j] == doctest::Approx(vu.values[j * layers + i]));

    // An MLP whose first-layer weights are permuted by the grid transpose
    // scores the swapped features identically.
    auto p = random_params({9, 6, 4, 1}, 99);
    ModelParams pt = p;
    for (std::size_t o = 0; o < p.sizes[1]; ++o)
        for (int i = 0; i < layers; ++i)
            for (int j = 0; j < layers; ++j)
                pt.w[0][o * 9 + static_cast<std::size_t>(j * layers + i)] =
                    p.w[0][o * 9 + static_cast<std::size_t>(i * layers + j)];
    CHECK(forward(pt, vu.values) == doctest::Approx(forward(p, uv.values)).epsilon(1e-12));
}

TEST_CASE("forward with zero parameters returns zero") {
    auto p = random_params({4, 3, 1}, 1);
    for (auto& layer : p.w)
        for (double& x : layer) x = 0.0;
    for (auto& layer : p.b)
        for (double& x : layer) x = 0.0;
    std::vector<double> in{1.0, -2.0, 3.0, 4.0};
    CHECK(forward(p, in) == 0.0);
}

TEST_CASE("forward traces a single path through identity-like weights") {
    // input 2 -> hidden 2 -> output 1; route input[1] through hidden unit 0.
    ModelParams p = ModelParams::init({2, 2, 1}, 7);
    p.w[0] = {0.0, 1.0,   // hidden0 takes input[1]
              0.0, 0.0};  // hidden1 dead
    p.b[0] = {0.0, 0.0};
    p.w[1] = {2.0, 0.0};  // output doubles hidden0
    p.b[1] = {0.25};
    std::vector<double> in{9.0, 3.0};
    CHECK(forward(p, in) == doctest::Approx(6.25));  // 2*relu(3)+0.25
    std::vector<double> neg{9.0, -3.0};
    CHECK(forward(p, neg) == doctest::Approx(0.25));  // relu clamps
}

TEST_CASE("forward matches an independently coded oracle") {
    Rng rng(1613);
    auto p = random_params({9, 8, 4, 1}, 17);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> in(9);
        for (double& x : in) x = rng.uniform_real(-2.0, 2.0);
        double got = forward(p, in);
        double expect = oracles::mlp_forward_oracle(p.sizes, p.w, p.b, in);
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("forward rejects shape mismatches") {
    auto p = random_params({4, 3, 1}, 1);
    std::vector<double> in{1.0, 2.0};
    CHECK_THROWS_AS(forward(p, in), Error);
}

TEST_CASE("gradient check on the reference net") {
    Rng rng(2222);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = random_params({9, 8, 4, 1}, 1000 + seed);
        std::vector<double> in(9);
        for (double& x : in) x = rng.uniform_real(-1.5, 1.5);
        double label = (seed % 2 == 0) ? 1.0 : 0.0;
        CHECK(gradient_check(p, in, label) <= 1e-4);
    }
}

TEST_CASE("zero input and zero params give zero hidden-weight gradients") {
    auto p = random_params({4, 3, 1}, 3);
    for (auto& layer : p.w)
        for (double& x : layer) x = 0.0;
    for (auto& layer : p.b)
        for (double& x : layer) x = 0.0;
    std::vector<double> in(4, 0.0);
    Gradients g = Gradients::zeros_like(p);
    backward(p, in, 0.0, g);
    for (double x : g.w[0]) CHECK(x == 0.0);
    for (double x : g.w[1]) CHECK(x == 0.0);
}

TEST_CASE("adam with weight decay shrinks parameter norms on zero gradients") {
    auto p = random_params({4, 3, 1}, 5);
    AdamConfig cfg;
    cfg.lr = 0.01;
    cfg.l2 = 0.1;
    Gradients zero = Gradients::zeros_like(p);
    auto norm = [](const ModelParams& m) {
        double s = 0.0;
        for (const auto& layer : m.w)
            for (double x : layer) s += x * x;
        return std::sqrt(s);
    };
    double prev = norm(p);
    for (int step = 0; step < 5; ++step) {
        adam_step(p, zero, cfg);
        double cur = norm(p);
        CHECK(cur < prev);
        prev = cur;
    }
}

namespace {

struct TrainFixture {
    BipartiteGraph g;
    LayerRepresentations reprs;
    std::vector<std::pair<NodeId, NodeId>> positives;
    std::vector<std::vector<NodeId>> exclusions;

    explicit TrainFixture(std::uint64_t seed) {
        PlantedConfig pc;
        pc.n_users = 50;
        pc.n_items = 50;
        pc.interactions_per_user = 10;
        pc.seed = seed;
        auto records = planted_block_dataset(pc);
        g = BipartiteGraph::build(records);

        Rng rng(seed);
        auto emb = oracles::random_embeddings(rng, g.n_nodes(), 8);
        // Give the embeddings block structure so training has signal.
        for (std::size_t v = 0; v < g.n_nodes(); ++v) {
            auto key = g.node_key(static_cast<NodeId>(v));
            std::size_t idx = std::stoul(key.substr(1));
            std::size_t block = (key[0] == 'u') ? planted_user_block(pc, idx)
                                                : planted_item_block(pc, idx);
            emb.row_mut(static_cast<NodeId>(v))[0] += block == 0 ? 2.0f : -2.0f;
        }
        auto mean = mean_embedding(emb);
        SamplerConfig sc;
        sc.budgets = {5, 5};
        reprs = precompute_all(g, emb, mean, sc, 2, 1);

        for (const auto& r : records) {
            auto u = g.user_id(r.user);
            auto i = g.item_id(r.item);
            positives.emplace_back(*u, *i);
        }
        for (std::size_t u = 0; u < g.n_users(); ++u) {
            auto ns = g.neighbors(static_cast<NodeId>(u));
            exclusions.emplace_back(ns.begin(), ns.end());
        }
    }
};

}  // namespace

TEST_CASE("training reduces validation loss on planted blocks") {
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        TrainFixture fx(seed);
        TrainConfig cfg;
        cfg.epochs = 30;
        cfg.batch = 64;
        cfg.seed = seed;
        cfg.hidden1 = 16;
        cfg.hidden2 = 8;
        cfg.patience = 30;
        auto result = train_model(fx.reprs, fx.positives, fx.exclusions, fx.g.n_users(),
                                  fx.g.n_items(), cfg);
        REQUIRE(result.history.size() >= 2);
        double first = result.history.front().val_loss;
        double best = first;
        for (const auto& e : result.history) best = std::min(best, e.val_loss);
        CHECK(best <= 0.9 * first);
    }
}

TEST_CASE("zero learning rate leaves parameters at initialization") {
    TrainFixture fx(44);
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 3;
    cfg.seed = 9;
    cfg.hidden1 = 8;
    cfg.hidden2 = 4;
    auto result = train_model(fx.reprs, fx.positives, fx.exclusions, fx.g.n_users(),
                              fx.g.n_items(), cfg);
    auto fresh = ModelParams::init({9, 8, 4, 1}, fork_seed(9, 0x696e6974ULL));
    CHECK(result.params.w == fresh.w);
    CHECK(result.params.b == fresh.b);
}

TEST_CASE("training is deterministic per seed") {
    TrainFixture fx(55);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch = 32;
    cfg.seed = 31;
    cfg.hidden1 = 8;
    cfg.hidden2 = 4;
    auto a = train_model(fx.reprs, fx.positives, fx.exclusions, fx.g.n_users(), fx.g.n_items(), cfg);
    auto b = train_model(fx.reprs, fx.positives, fx.exclusions, fx.g.n_users(), fx.g.n_items(), cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_loss == b.history[i].val_loss);
    }
    CHECK(a.params.w == b.params.w);
    CHECK(a.params.b == b.params.b);
}

TEST_CASE("training rejects an empty model set") {
    TrainFixture fx(66);
    TrainConfig cfg;
    CHECK_THROWS_AS(
        train_model(fx.reprs, {}, fx.exclusions, fx.g.n_users(), fx.g.n_items(), cfg), Error);
}

TEST_CASE("model checkpoints round-trip") {
    auto p = random_params({9, 8, 4, 1}, 77);
    std::string path = "/tmp/flatrec_model_test.bin";
    save_model(p, path);
    auto back = load_model(path);
    CHECK(back.sizes == p.sizes);
    CHECK(back.w == p.w);
    CHECK(back.b == p.b);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects foreign and damaged files") {
    std::string path = "/tmp/flatrec_model_bad.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "JUNKJUNKJUNK";
    }
    CHECK_THROWS_AS(load_model(path), BadMagicError);

    auto p = random_params({4, 3, 1}, 9);
    save_model(p, path);
    // chop the file in half
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes(64);
    in.read(bytes.data(), 64);
    in.close();
    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), 64);
    }
    CHECK_THROWS_AS(load_model(path), TruncatedError);
    std::remove(path.c_str());
}

TEST_CASE("train config validation") {
    TrainFixture fx(77);
    TrainConfig cfg;
    cfg.batch = 0;
    CHECK_THROWS_AS(
        train_model(fx.reprs, fx.positives, fx.exclusions, fx.g.n_users(), fx.g.n_items(), cfg),
        Error);
    cfg.batch = 32;
    cfg.negatives = 0;
    CHECK_THROWS_AS(
        train_model(fx.reprs, fx.positives, fx.exclusions, fx.g.n_users(), fx.g.n_items(), cfg),
        Error);
}
