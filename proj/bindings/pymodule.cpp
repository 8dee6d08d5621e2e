// Python bindings for the flatrec core: graph construction, samplers,
// precompute, training and evaluation, mirroring the CLI stages.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flatrec/eval.hpp"
#include "flatrec/pipeline.hpp"
#include "flatrec/synth.hpp"

namespace py = pybind11;
using namespace flatrec;

namespace {

std::vector<InteractionRecord> to_records(const std::vector<std::tuple<std::string, std::string, double>>& raw) {
    std::vector<InteractionRecord> out;
    out.reserve(raw.size());
    for (const auto& [u, i, w] : raw) out.push_back({u, i, w});
    return out;
}

std::vector<std::tuple<std::string, std::string, double>> from_records(
    const std::vector<InteractionRecord>& records) {
    std::vector<std::tuple<std::string, std::string, double>> out;
    out.reserve(records.size());
    for (const auto& r : records) out.emplace_back(r.user, r.item, r.weight);
    return out;
}

py::dict report_to_dict(const EvalReport& r) {
    py::dict d;
    d["cutoff"] = r.cutoff;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["ndcg"] = r.ndcg;
    d["users_evaluated"] = r.users_evaluated;
    d["users_skipped"] = r.users_skipped;
    py::list per_user;
    for (const auto& m : r.per_user) {
        py::dict u;
        u["user"] = m.user;
        u["n_test_items"] = m.n_test_items;
        u["precision"] = m.precision;
        u["recall"] = m.recall;
        u["ndcg"] = m.ndcg;
        per_user.append(u);
    }
    d["per_user"] = per_user;
    return d;
}

}  // namespace

PYBIND11_MODULE(_flatrec, m) {
    m.doc() = "flattened-GCN recommendation toolkit";

    py::register_exception<Error>(m, "FlatrecError");

    py::class_<BipartiteGraph>(m, "Graph")
        .def_static("build",
                    [](const std::vector<std::tuple<std::string, std::string, double>>& records) {
                        return BipartiteGraph::build(to_records(records));
                    },
                    py::arg("records"))
        .def_property_readonly("n_users", &BipartiteGraph::n_users)
        .def_property_readonly("n_items", &BipartiteGraph::n_items)
        .def_property_readonly("n_nodes", &BipartiteGraph::n_nodes)
        .def_property_readonly("n_edges", &BipartiteGraph::n_edges)
        .def("neighbors",
             [](const BipartiteGraph& g, NodeId v) {
                 auto ns = g.neighbors(v);
                 return std::vector<NodeId>(ns.begin(), ns.end());
             })
        .def("neighbor_set",
             [](const BipartiteGraph& g, NodeId u, int k) { return g.neighbor_set(u, k).members; },
             py::arg("u"), py::arg("k"))
        .def("edge_weight", &BipartiteGraph::edge_weight)
        .def("user_id", [](const BipartiteGraph& g, const std::string& k) { return g.user_id(k); })
        .def("item_id", [](const BipartiteGraph& g, const std::string& k) { return g.item_id(k); })
        .def("node_key", &BipartiteGraph::node_key);

    m.def("read_interactions",
          [](const std::string& path) { return from_records(read_interactions_file(path)); },
          py::arg("path"));
    m.def("write_interactions",
          [](const std::string& path,
             const std::vector<std::tuple<std::string, std::string, double>>& records) {
              write_interactions_file(path, to_records(records));
          });
    m.def("split_dataset",
          [](const std::vector<std::tuple<std::string, std::string, double>>& records,
             const std::array<double, 3>& ratios, std::uint64_t seed) {
              auto parts = split_dataset(to_records(records), ratios, seed);
              return py::make_tuple(from_records(parts.embed_set), from_records(parts.model_set),
                                    from_records(parts.test_set));
          },
          py::arg("records"), py::arg("ratios"), py::arg("seed"));
    m.def("planted_block_dataset",
          [](std::size_t n_users, std::size_t n_items, std::size_t blocks, double inter,
             double within, std::uint64_t seed, double popularity, double taste_bandwidth) {
              PlantedConfig cfg{n_users, n_items,   blocks, inter,
                                within,  seed,      popularity, taste_bandwidth};
              return from_records(planted_block_dataset(cfg));
          },
          py::arg("n_users") = 1000, py::arg("n_items") = 1000, py::arg("blocks") = 2,
          py::arg("interactions_per_user") = 20.0, py::arg("within") = 0.9, py::arg("seed") = 42,
          py::arg("popularity") = 0.8, py::arg("taste_bandwidth") = 0.07);

    py::class_<EmbeddingMatrix>(m, "Embeddings")
        .def_property_readonly("rows", &EmbeddingMatrix::rows)
        .def_property_readonly("dim", &EmbeddingMatrix::dim)
        .def("row", [](const EmbeddingMatrix& e, NodeId v) {
            auto r = e.row(v);
            return std::vector<float>(r.begin(), r.end());
        });

    m.def("pretrain_bpr",
          [](const BipartiteGraph& g,
             const std::vector<std::tuple<std::string, std::string, double>>& embed_set,
             std::size_t dim, int epochs, double lr, double reg, std::uint64_t seed) {
              BprConfig cfg{dim, epochs, lr, reg, seed};
              return pretrain_bpr(g, to_records(embed_set), cfg);
          },
          py::arg("graph"), py::arg("embed_set"), py::arg("dim") = 64, py::arg("epochs") = 30,
          py::arg("lr") = 0.05, py::arg("reg") = 1e-4, py::arg("seed") = 42);
    m.def("load_embeddings", &load_embeddings_file, py::arg("path"), py::arg("graph"));
    m.def("save_embeddings", &save_embeddings_file, py::arg("path"), py::arg("embeddings"),
          py::arg("graph"));
    m.def("mean_embedding", &mean_embedding);

    m.def("infomax_score", &infomax_score, py::arg("v"), py::arg("u"), py::arg("embeddings"),
          py::arg("mean"));
    m.def("exact_info_score", &exact_info_score, py::arg("v"), py::arg("u"), py::arg("embeddings"));
    m.def("select_topk", &select_topk, py::arg("graph"), py::arg("u"), py::arg("k"),
          py::arg("embeddings"), py::arg("mean"), py::arg("budget"));
    m.def("random_walk_sample", &random_walk_sample, py::arg("graph"), py::arg("u"), py::arg("k"),
          py::arg("budget"), py::arg("walks") = 1000, py::arg("walk_len") = 2,
          py::arg("seed") = 42);
    m.def("intuitive_sample", &intuitive_sample, py::arg("graph"), py::arg("u"), py::arg("k"),
          py::arg("budget"));

    py::class_<LayerRepresentations>(m, "LayerReprs")
        .def_property_readonly("n_nodes", &LayerRepresentations::n_nodes)
        .def_property_readonly("dim", &LayerRepresentations::dim)
        .def_property_readonly("K", &LayerRepresentations::K)
        .def("layer",
             [](const LayerRepresentations& r, NodeId v, int k) {
                 auto l = r.layer(v, k);
                 return std::vector<float>(l.begin(), l.end());
             })
        .def("layer_empty", &LayerRepresentations::layer_empty);

    m.def("precompute_all",
          [](const BipartiteGraph& g, const EmbeddingMatrix& emb, const std::string& sampler,
             const std::vector<std::size_t>& budgets, int K, int workers, int walks, int walk_len,
             std::uint64_t seed) {
              SamplerConfig sc;
              sc.kind = sampler_from_name(sampler);
              sc.budgets = budgets;
              sc.walks = walks;
              sc.walk_len = walk_len;
              sc.seed = seed;
              auto mean = mean_embedding(emb);
              return precompute_all(g, emb, mean, sc, K, workers);
          },
          py::arg("graph"), py::arg("embeddings"), py::arg("sampler") = "infomax",
          py::arg("budgets") = std::vector<std::size_t>{25, 25}, py::arg("K") = 2,
          py::arg("workers") = 1, py::arg("walks") = 1000, py::arg("walk_len") = 0,
          py::arg("seed") = 42);
    m.def("save_reprs", &save_reprs, py::arg("reprs"), py::arg("path"));
    m.def("load_reprs", &load_reprs, py::arg("path"), py::arg("expect_K") = std::nullopt);

    py::class_<ModelParams>(m, "Model").def_property_readonly(
        "sizes", [](const ModelParams& p) { return p.sizes; });

    m.def("cross_features",
          [](const LayerRepresentations& ur, NodeId u, const LayerRepresentations& ir, NodeId v) {
              return cross_features(ur, u, ir, v).values;
          });
    m.def("score",
          [](const ModelParams& p, const LayerRepresentations& reprs, NodeId u, NodeId v) {
              return forward(p, cross_features(reprs, u, reprs, v).values);
          },
          py::arg("model"), py::arg("reprs"), py::arg("u"), py::arg("v"));

    m.def("train_model",
          [](const LayerRepresentations& reprs,
             const std::vector<std::pair<NodeId, NodeId>>& positives,
             const std::vector<std::vector<NodeId>>& exclusions, std::size_t n_users,
             std::size_t n_items, double lr, double l2, int epochs, int batch, int negatives,
             int patience, std::size_t hidden1, std::size_t hidden2, std::uint64_t seed) {
              TrainConfig cfg;
              cfg.lr = lr;
              cfg.l2 = l2;
              cfg.epochs = epochs;
              cfg.batch = batch;
              cfg.negatives = negatives;
              cfg.patience = patience;
              cfg.hidden1 = hidden1;
              cfg.hidden2 = hidden2;
              cfg.seed = seed;
              auto result = train_model(reprs, positives, exclusions, n_users, n_items, cfg);
              py::list history;
              for (const auto& e : result.history)
                  history.append(py::make_tuple(e.epoch, e.train_loss, e.val_loss));
              return py::make_tuple(result.params, history, result.best_epoch);
          },
          py::arg("reprs"), py::arg("positives"), py::arg("exclusions"), py::arg("n_users"),
          py::arg("n_items"), py::arg("lr") = 1e-3, py::arg("l2") = 1e-5, py::arg("epochs") = 50,
          py::arg("batch") = 256, py::arg("negatives") = 1, py::arg("patience") = 5,
          py::arg("hidden1") = 64, py::arg("hidden2") = 32, py::arg("seed") = 42);
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    m.def("full_rank_evaluate",
          [](const ModelParams& model, const LayerRepresentations& reprs, const BipartiteGraph& g,
             const std::vector<std::tuple<std::string, std::string, double>>& test_set, int cutoff,
             int workers) {
              EvalConfig cfg{cutoff, workers};
              return report_to_dict(full_rank_evaluate(model, reprs, g, to_records(test_set), cfg));
          },
          py::arg("model"), py::arg("reprs"), py::arg("graph"), py::arg("test_set"),
          py::arg("cutoff") = 20, py::arg("workers") = 1);
}
