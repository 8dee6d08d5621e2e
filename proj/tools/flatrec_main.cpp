// flatrec: flattened-GCN recommendation pipeline driver.
//
// Subcommands mirror the pipeline stages: synth, split, pretrain,
// precompute, train, evaluate, bench. Every stage reads a shared
// `key = value` config file; --seed/--workers/--k/--sampler override it.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "flatrec/error.hpp"
#include "flatrec/pipeline.hpp"
#include "flatrec/synth.hpp"

namespace {

struct Overrides {
    std::string config_path;
    long long seed = -1;
    int workers = 0;
    int cutoff = 0;
    std::string sampler;
};

flatrec::PipelineConfig effective_config(const Overrides& ov) {
    if (ov.config_path.empty()) throw flatrec::ConfigError("config: --config is required");
    auto cfg = flatrec::load_config_file(ov.config_path);
    if (ov.seed >= 0) flatrec::apply_override(cfg, "seed", std::to_string(ov.seed));
    if (ov.workers > 0) flatrec::apply_override(cfg, "workers", std::to_string(ov.workers));
    if (ov.cutoff > 0) flatrec::apply_override(cfg, "eval.k", std::to_string(ov.cutoff));
    if (!ov.sampler.empty()) flatrec::apply_override(cfg, "sampler", ov.sampler);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "pipeline config file")->required();
    cmd->add_option("--seed", ov.seed, "override config seed");
    cmd->add_option("--workers", ov.workers, "override worker count");
    cmd->add_option("--k", ov.cutoff, "override evaluation cutoff");
    cmd->add_option("--sampler", ov.sampler, "override sampler (infomax|intuitive|random)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flattened-GCN recommendation toolkit"};
    app.require_subcommand(1);

    Overrides ov;

    // synth is config-free: it only fabricates an interaction file.
    flatrec::PlantedConfig synth_cfg;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a planted-block synthetic dataset");
    synth->add_option("--out", synth_out, "output interactions file")->required();
    synth->add_option("--users", synth_cfg.n_users, "number of users");
    synth->add_option("--items", synth_cfg.n_items, "number of items");
    synth->add_option("--blocks", synth_cfg.blocks, "number of preference blocks");
    synth->add_option("--inter", synth_cfg.interactions_per_user, "interactions per user");
    synth->add_option("--within", synth_cfg.within, "within-block probability");
    synth->add_option("--seed", synth_cfg.seed, "generator seed");

    auto* split = app.add_subcommand("split", "split interactions into embed/model/test sets");
    auto* pretrain = app.add_subcommand("pretrain", "train BPR embeddings on the embed set");
    auto* precompute = app.add_subcommand("precompute", "sample neighborhoods and precompute layer representations");
    auto* train = app.add_subcommand("train", "train the layer-ensemble scorer");
    auto* evaluate = app.add_subcommand("evaluate", "full-rank top-K evaluation on the test set");
    auto* bench = app.add_subcommand("bench", "compare samplers end to end");
    for (auto* cmd : {split, pretrain, precompute, train, evaluate, bench}) add_common(cmd, ov);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto records = flatrec::planted_block_dataset(synth_cfg);
            flatrec::write_interactions_file(synth_out, records);
            std::printf("wrote %zu interactions to %s\n", records.size(), synth_out.c_str());
            return 0;
        }

        auto cfg = effective_config(ov);
        if (split->parsed()) {
            flatrec::run_split(cfg);
            std::printf("split written: %s %s %s\n", cfg.embed_set.c_str(), cfg.model_set.c_str(),
                        cfg.test_set.c_str());
        } else if (pretrain->parsed()) {
            flatrec::run_pretrain(cfg);
            std::printf("embeddings written: %s\n", cfg.embeddings.c_str());
        } else if (precompute->parsed()) {
            flatrec::run_precompute(cfg);
            std::printf("layer representations written: %s\n", cfg.reprs.c_str());
        } else if (train->parsed()) {
            flatrec::run_train(cfg);
            std::printf("checkpoint written: %s\n", cfg.checkpoint.c_str());
        } else if (evaluate->parsed()) {
            auto report = flatrec::run_evaluate(cfg);
            std::printf("users=%zu skipped=%zu PRE@%d=%.4f REC@%d=%.4f NDCG@%d=%.4f\n",
                        report.users_evaluated, report.users_skipped, report.cutoff,
                        report.precision, report.cutoff, report.recall, report.cutoff,
                        report.ndcg);
            std::printf("report written: %s\n", cfg.report.c_str());
        } else if (bench->parsed()) {
            flatrec::run_bench(cfg);
            std::printf("benchmark written: %s\n", cfg.bench_report.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
