#include "flatrec/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "flatrec/binio.hpp"
#include "flatrec/error.hpp"

namespace flatrec {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

void require_input(const std::string& path, const std::string& name) {
    if (path.empty() || !fs::exists(path))
        throw DependencyError("stage dependency missing: " + name + " (" + path + ")");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// One manifest per stage, written next to the stage's primary output. The
// timestamp is the only field allowed to differ between identical re-runs.
void write_manifest(const std::string& stage, const PipelineConfig& cfg,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, const json& timings,
                    const std::string& primary_output) {
    json m;
    m["stage"] = stage;
    m["seed"] = cfg.seed;
    m["timestamp_utc"] = std::time(nullptr);
    m["config"] = cfg.effective();
    json in = json::object();
    for (const auto& p : inputs) in[p] = hash_hex(hash_file(p));
    m["inputs"] = in;
    m["outputs"] = outputs;
    m["wall_time_s"] = timings;

    fs::path dir = fs::path(primary_output).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path path = dir / ("manifest." + stage + ".json");
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path.string());
    out << m.dump(2) << '\n';
}

void ensure_parent_dir(const std::string& path) {
    fs::path dir = fs::path(path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

BipartiteGraph load_training_graph(const PipelineConfig& cfg,
                                   std::vector<InteractionRecord>* embed_out,
                                   std::vector<InteractionRecord>* model_out) {
    require_input(cfg.embed_set, "embed_set");
    require_input(cfg.model_set, "model_set");
    auto embed = read_interactions_file(cfg.embed_set);
    auto model = read_interactions_file(cfg.model_set);
    // The training graph carries embed + model edges; test edges never enter
    // the id space or the adjacency, so ids are stable across stages reading
    // the same two files.
    std::vector<InteractionRecord> all;
    all.reserve(embed.size() + model.size());
    all.insert(all.end(), embed.begin(), embed.end());
    all.insert(all.end(), model.begin(), model.end());
    auto g = BipartiteGraph::build(all);
    if (embed_out) *embed_out = std::move(embed);
    if (model_out) *model_out = std::move(model);
    return g;
}

}  // namespace

std::vector<std::pair<NodeId, NodeId>> resolve_pairs(const BipartiteGraph& g,
                                                     const std::vector<InteractionRecord>& records) {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        auto u = g.user_id(r.user);
        auto i = g.item_id(r.item);
        if (u && i) out.emplace_back(*u, *i);
    }
    return out;
}

std::vector<std::vector<NodeId>> build_user_exclusions(const BipartiteGraph& g) {
    std::vector<std::vector<NodeId>> excl(g.n_users());
    for (std::size_t u = 0; u < g.n_users(); ++u) {
        auto ns = g.neighbors(static_cast<NodeId>(u));
        excl[u].assign(ns.begin(), ns.end());  // already ascending
    }
    return excl;
}

void run_split(const PipelineConfig& cfg) {
    cfg.validate();
    require_input(cfg.interactions, "interactions");
    if (cfg.embed_set.empty() || cfg.model_set.empty() || cfg.test_set.empty())
        throw ConfigError("config: paths.embed_set/model_set/test_set: required for split");

    auto t0 = std::chrono::steady_clock::now();
    auto records = read_interactions_file(cfg.interactions);
    if (records.empty()) throw Error("interactions file has no records: " + cfg.interactions);
    auto parts = split_dataset(records, cfg.split_ratios, cfg.seed);

    ensure_parent_dir(cfg.embed_set);
    ensure_parent_dir(cfg.model_set);
    ensure_parent_dir(cfg.test_set);
    write_interactions_file(cfg.embed_set, parts.embed_set);
    write_interactions_file(cfg.model_set, parts.model_set);
    write_interactions_file(cfg.test_set, parts.test_set);

    json t;
    t["split"] = seconds_since(t0);
    write_manifest("split", cfg, {cfg.interactions}, {cfg.embed_set, cfg.model_set, cfg.test_set},
                   t, cfg.embed_set);
}

void run_pretrain(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.embeddings.empty()) throw ConfigError("config: paths.embeddings: required for pretrain");

    auto t0 = std::chrono::steady_clock::now();
    std::vector<InteractionRecord> embed_records;
    auto g = load_training_graph(cfg, &embed_records, nullptr);

    BprConfig bpr;
    bpr.dim = cfg.pretrain_dim;
    bpr.epochs = cfg.pretrain_epochs;
    bpr.lr = cfg.pretrain_lr;
    bpr.reg = cfg.pretrain_reg;
    bpr.seed = cfg.seed;
    auto emb = pretrain_bpr(g, embed_records, bpr);

    ensure_parent_dir(cfg.embeddings);
    save_embeddings_file(cfg.embeddings, emb, g);

    json t;
    t["pretrain"] = seconds_since(t0);
    write_manifest("pretrain", cfg, {cfg.embed_set, cfg.model_set}, {cfg.embeddings}, t,
                   cfg.embeddings);
}

void run_precompute(const PipelineConfig& cfg) {
    cfg.validate();
    require_input(cfg.embeddings, "embeddings");
    if (cfg.reprs.empty()) throw ConfigError("config: paths.reprs: required for precompute");

    auto t0 = std::chrono::steady_clock::now();
    auto g = load_training_graph(cfg, nullptr, nullptr);
    auto emb = load_embeddings_file(cfg.embeddings, g);
    auto mean = mean_embedding(emb);
    auto reprs = precompute_all(g, emb, mean, cfg.sampler_config(), cfg.k, cfg.workers);

    ensure_parent_dir(cfg.reprs);
    save_reprs(reprs, cfg.reprs);

    json t;
    t["precompute"] = seconds_since(t0);
    write_manifest("precompute", cfg, {cfg.embed_set, cfg.model_set, cfg.embeddings}, {cfg.reprs},
                   t, cfg.reprs);
}

void run_train(const PipelineConfig& cfg) {
    cfg.validate();
    require_input(cfg.reprs, "reprs");
    if (cfg.checkpoint.empty()) throw ConfigError("config: paths.checkpoint: required for train");

    auto t0 = std::chrono::steady_clock::now();
    std::vector<InteractionRecord> model_records;
    auto g = load_training_graph(cfg, nullptr, &model_records);
    auto reprs = load_reprs(cfg.reprs, cfg.k);
    if (reprs.n_nodes() != g.n_nodes())
        throw MismatchError(cfg.reprs + ": node count does not match the training graph");

    TrainConfig tc;
    tc.lr = cfg.train_lr;
    tc.l2 = cfg.train_l2;
    tc.epochs = cfg.train_epochs;
    tc.batch = cfg.train_batch;
    tc.negatives = cfg.train_negatives;
    tc.patience = cfg.train_patience;
    tc.hidden1 = cfg.hidden1;
    tc.hidden2 = cfg.hidden2;
    tc.seed = cfg.seed;

    auto positives = resolve_pairs(g, model_records);
    auto exclusions = build_user_exclusions(g);
    auto result = train_model(reprs, positives, exclusions, g.n_users(), g.n_items(), tc);

    ensure_parent_dir(cfg.checkpoint);
    save_model(result.params, cfg.checkpoint);
    std::vector<std::string> outputs{cfg.checkpoint};
    if (!cfg.history.empty()) {
        ensure_parent_dir(cfg.history);
        write_history_csv(cfg.history, result.history);
        outputs.push_back(cfg.history);
    }

    json t;
    t["train"] = seconds_since(t0);
    write_manifest("train", cfg, {cfg.embed_set, cfg.model_set, cfg.reprs}, outputs, t,
                   cfg.checkpoint);
}

EvalReport run_evaluate(const PipelineConfig& cfg) {
    cfg.validate();
    require_input(cfg.reprs, "reprs");
    require_input(cfg.checkpoint, "checkpoint");
    require_input(cfg.test_set, "test_set");
    if (cfg.report.empty()) throw ConfigError("config: paths.report: required for evaluate");

    auto t0 = std::chrono::steady_clock::now();
    auto g = load_training_graph(cfg, nullptr, nullptr);
    auto reprs = load_reprs(cfg.reprs, cfg.k);
    auto model = load_model(cfg.checkpoint);
    auto test_records = read_interactions_file(cfg.test_set);

    EvalConfig ec;
    ec.cutoff = cfg.eval_cutoff;
    ec.workers = cfg.workers;
    auto report = full_rank_evaluate(model, reprs, g, test_records, ec);

    ensure_parent_dir(cfg.report);
    write_report_csv(cfg.report, cfg.sampler, cfg.seed, report);
    std::vector<std::string> outputs{cfg.report};
    if (!cfg.per_user_report.empty()) {
        ensure_parent_dir(cfg.per_user_report);
        write_per_user_csv(cfg.per_user_report, report);
        outputs.push_back(cfg.per_user_report);
    }

    json t;
    t["evaluate"] = seconds_since(t0);
    write_manifest("evaluate", cfg,
                   {cfg.embed_set, cfg.model_set, cfg.reprs, cfg.checkpoint, cfg.test_set},
                   outputs, t, cfg.report);
    return report;
}

BenchRow run_pipeline_once(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                           const std::vector<InteractionRecord>& model_set,
                           const std::vector<InteractionRecord>& test_set,
                           const PipelineConfig& cfg, const std::string& sampler,
                           std::uint64_t seed) {
    BenchRow row;
    row.sampler = sampler;
    row.seed = seed;

    auto t0 = std::chrono::steady_clock::now();
    auto mean = mean_embedding(emb);
    SamplerConfig sc = cfg.sampler_config();
    sc.kind = sampler_from_name(sampler);
    sc.seed = seed;
    auto reprs = precompute_all(g, emb, mean, sc, cfg.k, cfg.workers);
    row.times.precompute = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    TrainConfig tc;
    tc.lr = cfg.train_lr;
    tc.l2 = cfg.train_l2;
    tc.epochs = cfg.train_epochs;
    tc.batch = cfg.train_batch;
    tc.negatives = cfg.train_negatives;
    tc.patience = cfg.train_patience;
    tc.hidden1 = cfg.hidden1;
    tc.hidden2 = cfg.hidden2;
    tc.seed = seed;
    auto positives = resolve_pairs(g, model_set);
    auto exclusions = build_user_exclusions(g);
    auto trained = train_model(reprs, positives, exclusions, g.n_users(), g.n_items(), tc);
    row.times.train = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    EvalConfig ec;
    ec.cutoff = cfg.eval_cutoff;
    ec.workers = cfg.workers;
    row.report = full_rank_evaluate(trained.params, reprs, g, test_set, ec);
    row.times.evaluate = seconds_since(t0);
    return row;
}

std::vector<BenchRow> bench_samplers(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                     const std::vector<InteractionRecord>& model_set,
                                     const std::vector<InteractionRecord>& test_set,
                                     const PipelineConfig& cfg) {
    if (cfg.bench_samplers.size() < 2) throw Error("bench needs at least two sampler configs");
    std::vector<BenchRow> rows;
    for (const auto& sampler : cfg.bench_samplers) {
        for (std::uint64_t seed : cfg.bench_seeds) {
            try {
                rows.push_back(run_pipeline_once(g, emb, model_set, test_set, cfg, sampler, seed));
            } catch (const std::exception& e) {
                throw Error("bench run failed for sampler " + sampler + ", seed " +
                            std::to_string(seed) + ": " + e.what());
            }
        }
    }
    return rows;
}

std::vector<BenchSummary> summarize_bench(const std::vector<BenchRow>& rows,
                                          const std::vector<std::string>& sampler_order) {
    auto mean_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
        return std::pair<double, double>(mean, std::sqrt(var));
    };

    std::vector<BenchSummary> out;
    for (const auto& sampler : sampler_order) {
        std::vector<double> pre, rec, ndcg;
        StageTimes sum;
        std::size_t n = 0;
        for (const auto& r : rows) {
            if (r.sampler != sampler) continue;
            pre.push_back(r.report.precision);
            rec.push_back(r.report.recall);
            ndcg.push_back(r.report.ndcg);
            sum.precompute += r.times.precompute;
            sum.train += r.times.train;
            sum.evaluate += r.times.evaluate;
            ++n;
        }
        if (n == 0) continue;
        BenchSummary s;
        s.sampler = sampler;
        s.runs = n;
        std::tie(s.precision_mean, s.precision_std) = mean_std(pre);
        std::tie(s.recall_mean, s.recall_std) = mean_std(rec);
        std::tie(s.ndcg_mean, s.ndcg_std) = mean_std(ndcg);
        const double inv = 1.0 / static_cast<double>(n);
        s.mean_times = {sum.precompute * inv, sum.train * inv, sum.evaluate * inv};
        out.push_back(std::move(s));
    }
    return out;
}

void write_bench_csv(const std::string& path, const std::vector<BenchSummary>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "sampler,runs,precision_mean,precision_std,recall_mean,recall_std,"
           "ndcg_mean,ndcg_std,t_precompute_s,t_train_s,t_evaluate_s\n";
    char buf[360];
    for (const auto& s : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.4f,%.4f,%.4f",
                      s.sampler.c_str(), s.runs, s.precision_mean, s.precision_std, s.recall_mean,
                      s.recall_std, s.ndcg_mean, s.ndcg_std, s.mean_times.precompute,
                      s.mean_times.train, s.mean_times.evaluate);
        out << buf << '\n';
    }
    if (!out) throw Error("write failed: " + path);
}

void run_bench(const PipelineConfig& cfg) {
    cfg.validate();
    require_input(cfg.test_set, "test_set");
    require_input(cfg.embeddings, "embeddings");
    if (cfg.bench_report.empty()) throw ConfigError("config: paths.bench_report: required for bench");

    std::vector<InteractionRecord> model_records;
    auto g = load_training_graph(cfg, nullptr, &model_records);
    auto emb = load_embeddings_file(cfg.embeddings, g);
    auto test_records = read_interactions_file(cfg.test_set);

    auto rows = bench_samplers(g, emb, model_records, test_records, cfg);
    auto summary = summarize_bench(rows, cfg.bench_samplers);

    ensure_parent_dir(cfg.bench_report);
    write_bench_csv(cfg.bench_report, summary);

    json t = json::object();
    write_manifest("bench", cfg,
                   {cfg.embed_set, cfg.model_set, cfg.test_set, cfg.embeddings},
                   {cfg.bench_report}, t, cfg.bench_report);
}

}  // namespace flatrec
