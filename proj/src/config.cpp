#include "flatrec/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "flatrec/error.hpp"

namespace flatrec {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config: " + key + ": expected integer, got '" + v + "'");
    return x;
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config: " + key + ": expected number, got '" + v + "'");
    return x;
}

// Budgets may appear as budget.k1, budget.k2, ... for any hop index.
bool apply_budget_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (key.rfind("budget.k", 0) != 0) return false;
    const std::string idx = key.substr(8);
    long long hop = to_int(key, idx.empty() ? "x" : idx);
    if (hop < 1 || hop > 64) throw ConfigError("config: " + key + ": hop index out of range");
    long long b = to_int(key, value);
    if (b < 1) throw ConfigError("config: " + key + ": budget must be >= 1");
    if (cfg.budgets.size() < static_cast<std::size_t>(hop)) cfg.budgets.resize(hop, 0);
    cfg.budgets[static_cast<std::size_t>(hop) - 1] = static_cast<std::size_t>(b);
    return true;
}

void apply_kv(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    auto pos_int = [&](int lo = 1) {
        long long x = to_int(key, value);
        if (x < lo) throw ConfigError("config: " + key + ": must be >= " + std::to_string(lo));
        return x;
    };

    if (key == "paths.interactions") cfg.interactions = value;
    else if (key == "paths.embed_set") cfg.embed_set = value;
    else if (key == "paths.model_set") cfg.model_set = value;
    else if (key == "paths.test_set") cfg.test_set = value;
    else if (key == "paths.embeddings") cfg.embeddings = value;
    else if (key == "paths.reprs") cfg.reprs = value;
    else if (key == "paths.checkpoint") cfg.checkpoint = value;
    else if (key == "paths.history") cfg.history = value;
    else if (key == "paths.report") cfg.report = value;
    else if (key == "paths.per_user_report") cfg.per_user_report = value;
    else if (key == "paths.bench_report") cfg.bench_report = value;
    else if (key == "split.embed") cfg.split_ratios[0] = to_double(key, value);
    else if (key == "split.model") cfg.split_ratios[1] = to_double(key, value);
    else if (key == "split.test") cfg.split_ratios[2] = to_double(key, value);
    else if (key == "graph.k") cfg.k = static_cast<int>(pos_int());
    else if (key == "sampler") cfg.sampler = value;
    else if (key == "sampler.walks") cfg.walks = static_cast<int>(pos_int());
    else if (key == "sampler.walk_len") cfg.walk_len = static_cast<int>(pos_int());
    else if (key == "pretrain.dim") cfg.pretrain_dim = static_cast<std::size_t>(pos_int());
    else if (key == "pretrain.epochs") cfg.pretrain_epochs = static_cast<int>(pos_int(0));
    else if (key == "pretrain.lr") cfg.pretrain_lr = to_double(key, value);
    else if (key == "pretrain.reg") cfg.pretrain_reg = to_double(key, value);
    else if (key == "train.lr") cfg.train_lr = to_double(key, value);
    else if (key == "train.l2") cfg.train_l2 = to_double(key, value);
    else if (key == "train.epochs") cfg.train_epochs = static_cast<int>(pos_int(0));
    else if (key == "train.batch") cfg.train_batch = static_cast<int>(pos_int());
    else if (key == "train.negatives") cfg.train_negatives = static_cast<int>(pos_int());
    else if (key == "train.patience") cfg.train_patience = static_cast<int>(pos_int(0));
    else if (key == "train.hidden1") cfg.hidden1 = static_cast<std::size_t>(pos_int());
    else if (key == "train.hidden2") cfg.hidden2 = static_cast<std::size_t>(pos_int());
    else if (key == "eval.k") cfg.eval_cutoff = static_cast<int>(pos_int());
    else if (key == "bench.samplers") cfg.bench_samplers = split_list(value);
    else if (key == "bench.seeds") {
        cfg.bench_seeds.clear();
        for (const auto& s : split_list(value))
            cfg.bench_seeds.push_back(static_cast<std::uint64_t>(to_int(key, s)));
    } else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "workers")
        cfg.workers = static_cast<int>(pos_int());
    else if (!apply_budget_key(cfg, key, value))
        throw ConfigError("config: unknown key '" + key + "'");

    cfg.raw[key] = value;
}

}  // namespace

SamplerConfig PipelineConfig::sampler_config() const {
    SamplerConfig sc;
    sc.kind = sampler_from_name(sampler);
    sc.budgets = budgets;
    if (sc.budgets.empty()) sc.budgets.assign(static_cast<std::size_t>(k), 25);
    sc.walks = walks;
    sc.walk_len = walk_len;
    sc.seed = seed;
    return sc;
}

void PipelineConfig::validate() const {
    if (k < 1) throw ConfigError("config: graph.k: must be >= 1");
    double sum = split_ratios[0] + split_ratios[1] + split_ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("config: split.*: ratios must sum to 1, got " + std::to_string(sum));
    for (std::size_t i = 0; i < budgets.size(); ++i)
        if (budgets[i] < 1)
            throw ConfigError("config: budget.k" + std::to_string(i + 1) + ": must be >= 1");
    if (!budgets.empty() && budgets.size() < static_cast<std::size_t>(k))
        throw ConfigError("config: budget.*: need budgets for hops 1.." + std::to_string(k));
    sampler_from_name(sampler);  // throws on an unknown name
    for (const auto& s : bench_samplers) sampler_from_name(s);
    if (bench_seeds.empty()) throw ConfigError("config: bench.seeds: need at least one seed");
    if (walk_len != 0 && walk_len < k)
        throw ConfigError("config: sampler.walk_len: must be >= graph.k");
}

std::map<std::string, std::string> PipelineConfig::effective() const {
    std::map<std::string, std::string> m;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    m["paths.interactions"] = interactions;
    m["paths.embed_set"] = embed_set;
    m["paths.model_set"] = model_set;
    m["paths.test_set"] = test_set;
    m["paths.embeddings"] = embeddings;
    m["paths.reprs"] = reprs;
    m["paths.checkpoint"] = checkpoint;
    m["paths.history"] = history;
    m["paths.report"] = report;
    m["paths.per_user_report"] = per_user_report;
    m["paths.bench_report"] = bench_report;
    m["split.embed"] = num(split_ratios[0]);
    m["split.model"] = num(split_ratios[1]);
    m["split.test"] = num(split_ratios[2]);
    m["graph.k"] = std::to_string(k);
    const auto eff_budgets = sampler_config().budgets;
    for (std::size_t i = 0; i < eff_budgets.size(); ++i)
        m["budget.k" + std::to_string(i + 1)] = std::to_string(eff_budgets[i]);
    m["sampler"] = sampler;
    m["sampler.walks"] = std::to_string(walks);
    m["sampler.walk_len"] = std::to_string(walk_len);
    m["pretrain.dim"] = std::to_string(pretrain_dim);
    m["pretrain.epochs"] = std::to_string(pretrain_epochs);
    m["pretrain.lr"] = num(pretrain_lr);
    m["pretrain.reg"] = num(pretrain_reg);
    m["train.lr"] = num(train_lr);
    m["train.l2"] = num(train_l2);
    m["train.epochs"] = std::to_string(train_epochs);
    m["train.batch"] = std::to_string(train_batch);
    m["train.negatives"] = std::to_string(train_negatives);
    m["train.patience"] = std::to_string(train_patience);
    m["train.hidden1"] = std::to_string(hidden1);
    m["train.hidden2"] = std::to_string(hidden2);
    m["eval.k"] = std::to_string(eval_cutoff);
    std::string samplers, seeds;
    for (const auto& s : bench_samplers) samplers += (samplers.empty() ? "" : ",") + s;
    for (auto s : bench_seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    m["bench.samplers"] = samplers;
    m["bench.seeds"] = seeds;
    m["seed"] = std::to_string(seed);
    m["workers"] = std::to_string(workers);
    return m;
}

PipelineConfig parse_config_text(const std::string& text, const std::string& source) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        apply_kv(cfg, key, value);
    }
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    apply_kv(cfg, key, value);
}

}  // namespace flatrec
