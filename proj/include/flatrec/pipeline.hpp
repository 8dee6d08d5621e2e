#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flatrec/config.hpp"
#include "flatrec/eval.hpp"

namespace flatrec {

// Wall-clock seconds per pipeline stage of one full run.
struct StageTimes {
    double precompute = 0.0;
    double train = 0.0;
    double evaluate = 0.0;
};

struct BenchRow {
    std::string sampler;
    std::uint64_t seed = 0;
    EvalReport report;
    StageTimes times;
};

struct BenchSummary {
    std::string sampler;
    double precision_mean = 0.0, precision_std = 0.0;
    double recall_mean = 0.0, recall_std = 0.0;
    double ndcg_mean = 0.0, ndcg_std = 0.0;
    StageTimes mean_times;
    std::size_t runs = 0;
};

// Stage entry points shared by the CLI; each reads its declared inputs,
// writes its declared artifacts plus a JSON run manifest next to the primary
// output, and throws DependencyError when an input artifact is missing.
void run_split(const PipelineConfig& cfg);
void run_pretrain(const PipelineConfig& cfg);
void run_precompute(const PipelineConfig& cfg);
void run_train(const PipelineConfig& cfg);
EvalReport run_evaluate(const PipelineConfig& cfg);

// In-memory pipeline (precompute -> train -> evaluate) over fixed pretrained
// embeddings, for one sampler and seed; everything else comes from cfg. Used
// by bench and by the end-to-end tests.
BenchRow run_pipeline_once(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                           const std::vector<InteractionRecord>& model_set,
                           const std::vector<InteractionRecord>& test_set,
                           const PipelineConfig& cfg, const std::string& sampler,
                           std::uint64_t seed);

// Sampler comparison: per sampler per seed runs the pipeline downstream of
// the shared embeddings with everything else held fixed and aggregates
// mean/std per metric plus per-stage wall times.
std::vector<BenchRow> bench_samplers(const BipartiteGraph& g, const EmbeddingMatrix& emb,
                                     const std::vector<InteractionRecord>& model_set,
                                     const std::vector<InteractionRecord>& test_set,
                                     const PipelineConfig& cfg);

std::vector<BenchSummary> summarize_bench(const std::vector<BenchRow>& rows,
                                          const std::vector<std::string>& sampler_order);

void run_bench(const PipelineConfig& cfg);

// Helpers shared across stages.
std::vector<std::pair<NodeId, NodeId>> resolve_pairs(const BipartiteGraph& g,
                                                     const std::vector<InteractionRecord>& records);
std::vector<std::vector<NodeId>> build_user_exclusions(const BipartiteGraph& g);
void require_input(const std::string& path, const std::string& name);

void write_bench_csv(const std::string& path, const std::vector<BenchSummary>& rows);

}  // namespace flatrec
