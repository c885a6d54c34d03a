// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// kvcrush command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kvcrush/kvcrush.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
    ApiError(kvc_status s, const std::string& what) : std::runtime_error(what), status(s) {}
    kvc_status status;
};

void check(kvc_status status) {
    if (status != KVC_OK) {
        throw ApiError(status, kvc_last_error());
    }
}

int exit_code_for(kvc_status status) {
    switch (status) {
    case KVC_ERR_INVALID_ARGUMENT:
    case KVC_ERR_INVALID_SPEC:
    case KVC_ERR_INVALID_FRACTION:
    case KVC_ERR_SCHEMA:
    case KVC_ERR_TOO_MANY_CELLS:
    case KVC_ERR_BUDGET_EXCEEDS_SEQUENCE:
    case KVC_ERR_WINDOW_TOO_LARGE:
    case KVC_ERR_BUDGET_TOO_SMALL:
    case KVC_ERR_K_TOO_LARGE:
    case KVC_ERR_LAYER_OUT_OF_RANGE:
    case KVC_ERR_ZERO_BUCKETS:
        return kExitUsage;
    default:
        return kExitRuntime;
    }
}

struct TraceDeleter {
    void operator()(kvc_trace t) const { kvc_trace_free(t); }
};
struct DecisionDeleter {
    void operator()(kvc_decision d) const { kvc_decision_free(d); }
};
struct ReportDeleter {
    void operator()(kvc_report r) const { kvc_report_free(r); }
};
struct StringDeleter {
    void operator()(char* s) const { kvc_string_free(s); }
};
using TraceHandle = std::unique_ptr<kvc_trace_s, TraceDeleter>;
using DecisionHandle = std::unique_ptr<kvc_decision_s, DecisionDeleter>;
using ReportHandle = std::unique_ptr<kvc_report_s, ReportDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

template <typename E>
struct Named {
    const char* name;
    E value;
};

constexpr Named<kvc_policy> kPolicies[] = {{"fullkv", KVC_POLICY_FULLKV},
                                           {"h2o", KVC_POLICY_H2O},
                                           {"window", KVC_POLICY_WINDOW},
                                           {"snapkv", KVC_POLICY_SNAPKV},
                                           {"pyramidkv", KVC_POLICY_PYRAMIDKV}};
constexpr Named<kvc_anchor> kAnchors[] = {
    {"random", KVC_ANCHOR_RANDOM}, {"mean", KVC_ANCHOR_MEAN}, {"alternating", KVC_ANCHOR_ALTERNATING}};
constexpr Named<kvc_granularity> kGranularities[] = {
    {"token", KVC_GRANULARITY_TOKEN}, {"chunk", KVC_GRANULARITY_CHUNK}, {"page", KVC_GRANULARITY_PAGE}};
constexpr Named<kvc_grouping> kGroupings[] = {{"kvcrush", KVC_GROUPING_KVCRUSH}, {"kmeans", KVC_GROUPING_KMEANS}};

template <typename E, std::size_t N>
E lookup(const Named<E> (&table)[N], const std::string& name, const char* what) {
    for (const auto& entry : table) {
        if (name == entry.name) {
            return entry.value;
        }
    }
    std::string options;
    for (const auto& entry : table) {
        options += options.empty() ? "" : ", ";
        options += entry.name;
    }
    throw UsageError("unknown " + std::string(what) + " '" + name + "' (expected one of: " + options + ")");
}

double parse_double(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw UsageError("not a number: '" + text + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& text) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-') {
        throw UsageError("not a non-negative integer: '" + text + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) {
        out.push_back(part);
    }
    return out;
}

// "0.1,0.5" or "start:stop:step" (inclusive); values snapped to 1e-12.
std::vector<double> parse_double_axis(const std::vector<std::string>& items) {
    std::vector<double> out;
    for (const auto& item : items) {
        const auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(parse_double(item));
            continue;
        }
        if (parts.size() != 3) {
            throw UsageError("range must be start:stop:step, got '" + item + "'");
        }
        const double start = parse_double(parts[0]);
        const double stop = parse_double(parts[1]);
        const double step = parse_double(parts[2]);
        if (!(step > 0.0) || stop < start) {
            throw UsageError("empty or invalid range '" + item + "'");
        }
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
        }
    }
    return out;
}

// "1,2,5" or "start:stop" (inclusive).
std::vector<std::uint64_t> parse_u64_axis(const std::vector<std::string>& items) {
    std::vector<std::uint64_t> out;
    for (const auto& item : items) {
        const auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(parse_u64(item));
            continue;
        }
        if (parts.size() != 2) {
            throw UsageError("range must be start:stop, got '" + item + "'");
        }
        const auto start = parse_u64(parts[0]);
        const auto stop = parse_u64(parts[1]);
        if (stop < start) {
            throw UsageError("empty range '" + item + "'");
        }
        for (auto v = start; v <= stop; ++v) {
            out.push_back(v);
        }
    }
    return out;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) {
        throw ApiError(KVC_ERR_IO_FAILURE, "cannot write '" + path + "'");
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ApiError(KVC_ERR_IO_FAILURE, "cannot open '" + path + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TraceHandle load_trace(const std::string& path) {
    kvc_trace t = nullptr;
    check(kvc_trace_read(path.c_str(), &t));
    return TraceHandle(t);
}

// Synthetic generator flags shared by gen and sweep.
struct SyntheticFlags {
    kvc_synthetic_spec spec{};

    SyntheticFlags() { kvc_synthetic_spec_default(&spec); }

    void attach(CLI::App* cmd, bool with_seed) {
        cmd->add_option("--seq-len", spec.seq_len, "Sequence length S")->capture_default_str();
        cmd->add_option("--layers", spec.num_layers, "Number of layers")->capture_default_str();
        cmd->add_option("--heads", spec.num_heads, "Heads per layer")->capture_default_str();
        cmd->add_option("--head-dim", spec.head_dim, "Head dimension")->capture_default_str();
        cmd->add_option("--clusters", spec.num_clusters, "Latent token clusters")->capture_default_str();
        cmd->add_option("--spread", spec.cluster_spread, "Cluster noise relative to center distance")
            ->capture_default_str();
        cmd->add_option("--sink-fraction", spec.sink_fraction, "Share of attention-sink heads")
            ->capture_default_str();
        cmd->add_option("--recency-bias", spec.recency_bias, "Share of recency heads")->capture_default_str();
        cmd->add_option("--focus", spec.focus, "Logit gap of a query's target cluster")->capture_default_str();
        cmd->add_option("--decode-rows", spec.decode_rows, "Trailing queries with independent targets")
            ->capture_default_str();
        cmd->add_option("--precision", spec.precision, "Bytes per scalar recorded in the header (2 or 4)")
            ->capture_default_str();
        if (with_seed) {
            cmd->add_option("--seed", spec.rng_seed, "Generator seed")->capture_default_str();
        }
    }
};

// Selection flags shared by select and sweep.
struct SelectFlags {
    kvc_select_config config{};
    std::string policy = "h2o";
    std::string anchor = "mean";
    std::string granularity = "token";
    std::string grouping = "kvcrush";
    std::uint64_t page_size = 32;
    std::uint64_t chunk_size = 8;
    bool no_causal = false;

    SelectFlags() { kvc_select_config_default(&config); }

    void attach(CLI::App* cmd, bool with_seed) {
        cmd->add_option("--budget", config.budget, "Total cache budget B in tokens")->capture_default_str();
        cmd->add_option("--kvcrush-frac", config.kvcrush_fraction, "Share of B held by representatives")
            ->capture_default_str();
        cmd->add_option("--policy", policy, "Baseline: fullkv, h2o, window, snapkv, pyramidkv")
            ->capture_default_str();
        cmd->add_option("--granularity", granularity, "token, chunk or page")->capture_default_str();
        cmd->add_option("--page-size", page_size, "Tokens per page in page mode")->capture_default_str();
        cmd->add_option("--chunk-size", chunk_size, "Tokens per chunk in chunk mode")->capture_default_str();
        cmd->add_option("--anchor", anchor, "Anchor: random, mean, alternating")->capture_default_str();
        cmd->add_option("--grouping", grouping, "kvcrush (Hamming buckets) or kmeans")->capture_default_str();
        cmd->add_option("--retain-fraction", config.retain_fraction, "Per-head fingerprint retention f")
            ->capture_default_str();
        cmd->add_option("--kmeans-iters", config.kmeans_iters, "Lloyd iterations for --grouping kmeans")
            ->capture_default_str();
        cmd->add_option("--window", config.window, "Observation window for snapkv/pyramidkv")
            ->capture_default_str();
        cmd->add_option("--pool-width", config.pool_width, "Max-pool width for snapkv/pyramidkv (odd)")
            ->capture_default_str();
        cmd->add_option("--sinks", config.sinks, "Leading tokens kept by the window policy")
            ->capture_default_str();
        cmd->add_option("--recents", config.recents, "Trailing tokens kept by the window policy")
            ->capture_default_str();
        cmd->add_option("--taper", config.taper, "PyramidKV per-layer budget ratio")->capture_default_str();
        if (with_seed) {
            cmd->add_option("--seed", config.seed, "Anchor RNG seed")->capture_default_str();
        }
        cmd->add_flag("--no-causal", no_causal, "Score with unmasked attention");
    }

    kvc_select_config resolve() const {
        kvc_select_config c = config;
        c.policy = lookup(kPolicies, policy, "policy");
        c.anchor = lookup(kAnchors, anchor, "anchor");
        c.granularity = lookup(kGranularities, granularity, "granularity");
        c.grouping = lookup(kGroupings, grouping, "grouping");
        c.unit_size = c.granularity == KVC_GRANULARITY_PAGE    ? page_size
                      : c.granularity == KVC_GRANULARITY_CHUNK ? chunk_size
                                                               : 1;
        c.causal = no_causal ? 0 : 1;
        return c;
    }
};

int run_gen(SyntheticFlags& flags, const std::string& out) {
    kvc_trace t = nullptr;
    check(kvc_trace_generate(&flags.spec, &t));
    TraceHandle trace(t);
    check(kvc_trace_write(trace.get(), out.c_str()));
    kvc_trace_info info{};
    check(kvc_trace_get_info(trace.get(), &info));
    std::cout << "model=" << info.model_name << " layers=" << info.num_layers << " heads=" << info.num_heads
              << " head_dim=" << info.head_dim << " seq_len=" << info.seq_len << " precision=" << info.precision
              << " labels=" << (info.has_labels ? "yes" : "no") << " -> " << out << "\n";
    return 0;
}

int run_select(const std::string& trace_path, const SelectFlags& flags, const std::string& out) {
    const auto config = flags.resolve();
    auto trace = load_trace(trace_path);
    kvc_decision d = nullptr;
    check(kvc_select(trace.get(), &config, &d));
    DecisionHandle decision(d);
    char* json = nullptr;
    check(kvc_decision_to_json(decision.get(), &json));
    OwnedString text(json);
    write_output(out, text.get());
    return 0;
}

int run_eval(const std::string& trace_path, const std::string& decision_path, bool csv, const std::string& out) {
    auto trace = load_trace(trace_path);
    const auto text = read_text(decision_path);
    kvc_decision d = nullptr;
    check(kvc_decision_from_json(text.c_str(), &d));
    DecisionHandle decision(d);
    kvc_report r = nullptr;
    check(kvc_evaluate(trace.get(), decision.get(), &r));
    ReportHandle report(r);
    char* body = nullptr;
    check(csv ? kvc_report_to_csv(report.get(), &body) : kvc_report_to_json(report.get(), &body));
    OwnedString owned(body);
    write_output(out, owned.get());
    return 0;
}

struct GridFlags {
    std::vector<std::string> anchors;
    std::vector<std::string> fractions;
    std::vector<std::string> policies;
    std::vector<std::string> budgets;
    std::vector<std::string> groupings;
    std::vector<std::string> retain_fractions;
    std::vector<std::string> seeds;
    std::uint64_t max_cells = 4096;

    void attach(CLI::App* cmd) {
        cmd->add_option("--grid-anchor", anchors, "Anchor strategies, comma separated")->delimiter(',');
        cmd->add_option("--grid-fraction", fractions, "KVCrush budget shares; list or start:stop:step")
            ->delimiter(',');
        cmd->add_option("--grid-policy", policies, "Baseline policies")->delimiter(',');
        cmd->add_option("--grid-budget", budgets, "Total budgets; list or start:stop")->delimiter(',');
        cmd->add_option("--grid-grouping", groupings, "Grouping methods")->delimiter(',');
        cmd->add_option("--grid-retain-fraction", retain_fractions, "Fingerprint retention f; list or range")
            ->delimiter(',');
        cmd->add_option("--seeds", seeds, "Paired seeds; list or start:stop")->delimiter(',');
        cmd->add_option("--max-cells", max_cells, "Refuse sweeps with more cells than this")
            ->capture_default_str();
    }
};

int run_sweep(const std::string& trace_path, SyntheticFlags& synthetic, const SelectFlags& select,
              const GridFlags& grid, const std::string& out) {
    const auto base = select.resolve();

    std::vector<kvc_anchor> anchors;
    for (const auto& a : grid.anchors) {
        anchors.push_back(lookup(kAnchors, a, "anchor"));
    }
    std::vector<kvc_policy> policies;
    for (const auto& p : grid.policies) {
        policies.push_back(lookup(kPolicies, p, "policy"));
    }
    std::vector<kvc_grouping> groupings;
    for (const auto& g : grid.groupings) {
        groupings.push_back(lookup(kGroupings, g, "grouping"));
    }
    const auto fractions = parse_double_axis(grid.fractions);
    const auto retain = parse_double_axis(grid.retain_fractions);
    const auto budgets = parse_u64_axis(grid.budgets);
    const auto seeds = parse_u64_axis(grid.seeds);

    kvc_sweep_grid g{};
    g.anchors = anchors.data();
    g.anchor_count = anchors.size();
    g.fractions = fractions.data();
    g.fraction_count = fractions.size();
    g.policies = policies.data();
    g.policy_count = policies.size();
    g.budgets = budgets.data();
    g.budget_count = budgets.size();
    g.groupings = groupings.data();
    g.grouping_count = groupings.size();
    g.retain_fractions = retain.data();
    g.retain_fraction_count = retain.size();
    g.seeds = seeds.data();
    g.seed_count = seeds.size();
    g.max_cells = grid.max_cells;

    TraceHandle trace;
    if (!trace_path.empty()) {
        trace = load_trace(trace_path);
    }
    char* csv = nullptr;
    check(kvc_sweep_run(trace.get(), trace ? nullptr : &synthetic.spec, &base, &g, &csv));
    OwnedString text(csv);
    write_output(out, text.get());
    return 0;
}

struct MemFlags {
    std::string trace;
    std::uint32_t layers = 96;
    std::uint32_t heads = 96;
    std::uint32_t head_dim = 128;
    std::uint32_t seq_len = 8192;
    std::uint32_t precision = 2;
    std::uint64_t batch = 1;
};

int run_mem(const MemFlags& flags) {
    MemFlags f = flags;
    if (!f.trace.empty()) {
        auto trace = load_trace(f.trace);
        kvc_trace_info info{};
        check(kvc_trace_get_info(trace.get(), &info));
        f.layers = info.num_layers;
        f.heads = info.num_heads;
        f.head_dim = info.head_dim;
        f.seq_len = info.seq_len;
        f.precision = info.precision;
    }
    std::uint64_t bytes = 0;
    check(kvc_kv_memory_bytes(f.layers, f.heads, f.head_dim, f.seq_len, f.precision, f.batch, &bytes));
    const double gib = static_cast<double>(bytes) / (1024.0 * 1024.0 * 1024.0);
    std::cout << "{\"bytes\": " << bytes << ", \"gib\": " << gib << ", \"batch\": " << f.batch
              << ", \"layers\": " << f.layers << ", \"heads\": " << f.heads << ", \"head_dim\": " << f.head_dim
              << ", \"seq_len\": " << f.seq_len << ", \"precision\": " << f.precision << "}\n";
    return 0;
}

struct BenchFlags {
    std::uint64_t seq_len = 4096;
    std::uint64_t heads = 32;
    std::uint64_t buckets = 64;
    std::uint64_t kmeans_iters = 100;
    std::uint64_t repetitions = 5;
    std::uint64_t seed = 0;
    std::string out;
};

int run_bench(const BenchFlags& f) {
    char* json = nullptr;
    check(kvc_bench_grouping(f.seq_len, f.heads, f.buckets, f.kmeans_iters, f.repetitions, f.seed, &json));
    OwnedString text(json);
    write_output(f.out, text.get());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kvcrush: KV-cache eviction with binary fingerprints and Hamming grouping"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kvc_version()));
    app.set_config("--config", "",
                   "TOML config file with one [command] table per subcommand; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.fallthrough();

    auto* gen = app.add_subcommand("gen", "Generate a synthetic clustered trace");
    SyntheticFlags gen_flags;
    gen_flags.attach(gen, true);
    std::string gen_out;
    gen->add_option("-o,--output", gen_out, "Trace file to write")->required();

    auto* select = app.add_subcommand("select", "Choose retained tokens for every layer of a trace");
    std::string select_trace;
    std::string select_out;
    SelectFlags select_flags;
    select->add_option("--trace", select_trace, "Input trace file")->required();
    select_flags.attach(select, true);
    select->add_option("-o,--output", select_out, "Decision JSON (stdout when omitted)");

    auto* eval = app.add_subcommand("eval", "Score a decision against the full cache");
    std::string eval_trace;
    std::string eval_decision;
    std::string eval_out;
    bool eval_csv = false;
    eval->add_option("--trace", eval_trace, "Input trace file")->required();
    eval->add_option("--decision", eval_decision, "Decision JSON from select")->required();
    eval->add_flag("--csv", eval_csv, "Write CSV (one row per layer) instead of JSON");
    eval->add_option("-o,--output", eval_out, "Report file (stdout when omitted)");

    auto* sweep = app.add_subcommand("sweep", "Evaluate a grid of configurations over paired seeds");
    std::string sweep_trace;
    std::string sweep_out;
    SyntheticFlags sweep_synthetic;
    SelectFlags sweep_select;
    GridFlags sweep_grid;
    auto* trace_opt = sweep->add_option("--trace", sweep_trace, "Reuse this trace for every seed");
    sweep_synthetic.attach(sweep, false);
    sweep_select.attach(sweep, false);
    sweep_grid.attach(sweep);
    sweep->add_option("-o,--output", sweep_out, "CSV file (stdout when omitted)");
    for (const char* name : {"--seq-len", "--layers", "--heads", "--head-dim", "--clusters", "--spread",
                             "--sink-fraction", "--recency-bias", "--focus", "--decode-rows", "--precision"}) {
        trace_opt->excludes(sweep->get_option(name));
    }

    auto* mem = app.add_subcommand("mem", "KV cache size: 2 * batch * layers * heads * S * head_dim * bytes");
    MemFlags mem_flags;
    auto* mem_trace = mem->add_option("--trace", mem_flags.trace, "Take dimensions from a trace header");
    for (auto* opt : {mem->add_option("--layers", mem_flags.layers)->capture_default_str(),
                      mem->add_option("--heads", mem_flags.heads)->capture_default_str(),
                      mem->add_option("--head-dim", mem_flags.head_dim)->capture_default_str(),
                      mem->add_option("--seq-len", mem_flags.seq_len)->capture_default_str(),
                      mem->add_option("--precision", mem_flags.precision, "Bytes per scalar")
                          ->capture_default_str()}) {
        mem_trace->excludes(opt);
    }
    mem->add_option("--batch", mem_flags.batch)->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Time the grouping phase at S, 2S, 4S and against k-means");
    BenchFlags bench_flags;
    bench->add_option("--seq-len", bench_flags.seq_len)->capture_default_str();
    bench->add_option("--heads", bench_flags.heads)->capture_default_str();
    bench->add_option("--buckets", bench_flags.buckets, "Bucket count, also k for k-means")->capture_default_str();
    bench->add_option("--kmeans-iters", bench_flags.kmeans_iters)->capture_default_str();
    bench->add_option("--reps", bench_flags.repetitions, "Timed samples per point (>= 5)")->capture_default_str();
    bench->add_option("--seed", bench_flags.seed)->capture_default_str();
    bench->add_option("-o,--output", bench_flags.out, "JSON file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            return run_gen(gen_flags, gen_out);
        }
        if (select->parsed()) {
            return run_select(select_trace, select_flags, select_out);
        }
        if (eval->parsed()) {
            return run_eval(eval_trace, eval_decision, eval_csv, eval_out);
        }
        if (sweep->parsed()) {
            return run_sweep(sweep_trace, sweep_synthetic, sweep_select, sweep_grid, sweep_out);
        }
        if (mem->parsed()) {
            return run_mem(mem_flags);
        }
        if (bench->parsed()) {
            return run_bench(bench_flags);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ApiError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.status);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
