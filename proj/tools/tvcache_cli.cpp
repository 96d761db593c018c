#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvcache/tvcache.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct ScenarioDeleter {
    void operator()(tvc_scenario* s) const { tvc_scenario_free(s); }
};
using ScenarioPtr = std::unique_ptr<tvc_scenario, ScenarioDeleter>;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::uint32_t> replications;
    std::optional<std::uint32_t> threads;
    bool dry_run = false;
};

int report(tvc_status st) {
    if (st == TVC_OK) return kExitOk;
    const std::string key = tvc_last_error_key();
    std::cerr << "error: " << tvc_last_error() << '\n';
    if (st == TVC_ERR_CONFIG) {
        if (!key.empty()) std::cerr << "  offending key: " << key << '\n';
        return kExitConfig;
    }
    return kExitFailure;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "Scenario JSON file, or preset:NAME")->required();
    cmd->add_option("--seed", o.seed, "Override the scenario seed");
    cmd->add_option("-o,--out", o.out, "Override the output directory");
    cmd->add_option("--replications", o.replications, "Override the replication count");
    cmd->add_option("--threads", o.threads, "Worker threads for replications");
    cmd->add_flag("--dry-run", o.dry_run, "Validate the configuration and exit");
}

tvc_status load(const CommonOptions& o, ScenarioPtr& out) {
    tvc_scenario* raw = nullptr;
    const std::string prefix = "preset:";
    const tvc_status st = o.config.rfind(prefix, 0) == 0
                              ? tvc_scenario_load_preset(o.config.substr(prefix.size()).c_str(), &raw)
                              : tvc_scenario_load_file(o.config.c_str(), &raw);
    if (st != TVC_OK) return st;
    out.reset(raw);
    if (o.seed) tvc_scenario_set_seed(raw, *o.seed);
    if (o.out) tvc_scenario_set_output_dir(raw, o.out->c_str());
    if (o.replications) {
        if (auto s = tvc_scenario_set_replications(raw, *o.replications); s != TVC_OK) return s;
    }
    if (o.threads) {
        if (auto s = tvc_scenario_set_threads(raw, *o.threads); s != TVC_OK) return s;
    }
    return tvc_scenario_validate(raw);
}

void print_rows(const std::vector<tvc_summary_row>& rows) {
    for (const auto& r : rows) {
        std::printf("%-24s M=%-3u loss=%.6f fetching_cost=%.4f downloads_per_update=%.4f updates=%.2f\n", r.strategy,
                    r.cache_size, r.mean_offloading_loss, r.fetching_cost, r.downloads_per_update,
                    r.updates_per_replication);
    }
}

template <class Fn>
tvc_status with_rows(Fn&& fn, std::vector<tvc_summary_row>& rows) {
    size_t n = 0;
    rows.resize(64);
    tvc_status st = fn(rows.data(), rows.size(), &n);
    if (st == TVC_OK && n > rows.size()) {
        rows.resize(n);
        st = fn(rows.data(), rows.size(), &n);
    }
    rows.resize(st == TVC_OK ? n : 0);
    return st;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random caching under time-varying popularity: scenarios, bounds and sweeps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tvc_version()));

    CommonOptions run_opts, bounds_opts, sweep_opts, validate_opts;
    std::vector<std::int64_t> grid_t, grid_T;
    std::vector<double> grid_delta;
    std::vector<std::uint32_t> cache_sizes;
    std::string preset_name;

    auto* run = app.add_subcommand("run", "Run every configured strategy and write results/updates/summary CSVs");
    add_common(run, run_opts);

    auto* bounds = app.add_subcommand("bounds", "Evaluate the PAC bound on a (t, T, delta) grid and write bounds.csv");
    add_common(bounds, bounds_opts);
    bounds->add_option("--t", grid_t, "Observation lengths (slots)");
    bounds->add_option("--T", grid_T, "Look-ahead offsets (slots)");
    bounds->add_option("--delta", grid_delta, "Target failure probabilities");

    auto* sweep = app.add_subcommand("sweep", "Rerun the scenario per cache size and write sweep.csv");
    add_common(sweep, sweep_opts);
    sweep->add_option("--cache-sizes", cache_sizes, "Cache sizes M (overrides sweep.cache_sizes)");

    auto* validate = app.add_subcommand("validate", "Check a configuration and print its resolved JSON");
    add_common(validate, validate_opts);

    auto* preset = app.add_subcommand("preset", "List built-in presets, or print one as JSON");
    preset->add_option("name", preset_name, "Preset name");

    CLI11_PARSE(app, argc, argv);

    ScenarioPtr scenario;
    if (*run) {
        if (auto st = load(run_opts, scenario); st != TVC_OK) return report(st);
        if (run_opts.dry_run) {
            std::cout << "config OK\n";
            return kExitOk;
        }
        std::vector<tvc_summary_row> rows;
        const auto st = with_rows(
            [&](tvc_summary_row* r, size_t m, size_t* n) { return tvc_run(scenario.get(), r, m, n); }, rows);
        if (st != TVC_OK) return report(st);
        print_rows(rows);
        return kExitOk;
    }
    if (*bounds) {
        if (auto st = load(bounds_opts, scenario); st != TVC_OK) return report(st);
        if (!grid_t.empty() || !grid_T.empty() || !grid_delta.empty()) {
            const auto st = tvc_scenario_set_bounds_grid(
                scenario.get(), grid_t.empty() ? nullptr : grid_t.data(), grid_t.size(),
                grid_T.empty() ? nullptr : grid_T.data(), grid_T.size(),
                grid_delta.empty() ? nullptr : grid_delta.data(), grid_delta.size());
            if (st != TVC_OK) return report(st);
        }
        if (bounds_opts.dry_run) {
            std::cout << "config OK\n";
            return kExitOk;
        }
        size_t n_rows = 0, n_infeasible = 0;
        if (auto st = tvc_bounds(scenario.get(), &n_rows, &n_infeasible); st != TVC_OK) return report(st);
        std::printf("%zu grid points, %zu infeasible\n", n_rows, n_infeasible);
        return kExitOk;
    }
    if (*sweep) {
        if (auto st = load(sweep_opts, scenario); st != TVC_OK) return report(st);
        if (sweep->count("--cache-sizes") > 0) {
            const auto st = tvc_scenario_set_cache_sizes(scenario.get(), cache_sizes.data(), cache_sizes.size());
            if (st != TVC_OK) return report(st);
        }
        if (sweep_opts.dry_run) {
            std::cout << "config OK\n";
            return kExitOk;
        }
        std::vector<tvc_summary_row> rows;
        const auto st = with_rows(
            [&](tvc_summary_row* r, size_t m, size_t* n) { return tvc_sweep(scenario.get(), r, m, n); }, rows);
        if (st != TVC_OK) return report(st);
        print_rows(rows);
        return kExitOk;
    }
    if (*validate) {
        if (auto st = load(validate_opts, scenario); st != TVC_OK) return report(st);
        size_t needed = 0;
        tvc_scenario_json(scenario.get(), nullptr, 0, &needed);
        std::string text(needed, '\0');
        tvc_scenario_json(scenario.get(), text.data(), text.size(), &needed);
        text.resize(needed - 1);
        std::cout << text << '\n';
        return kExitOk;
    }
    if (*preset) {
        size_t needed = 0;
        if (preset_name.empty()) {
            tvc_preset_names(nullptr, 0, &needed);
            std::string text(needed, '\0');
            tvc_preset_names(text.data(), text.size(), &needed);
            text.resize(needed - 1);
            std::cout << text;
            return kExitOk;
        }
        if (auto st = tvc_preset_json(preset_name.c_str(), nullptr, 0, &needed); st != TVC_OK) return report(st);
        std::string text(needed, '\0');
        tvc_preset_json(preset_name.c_str(), text.data(), text.size(), &needed);
        text.resize(needed - 1);
        std::cout << text << '\n';
        return kExitOk;
    }
    return kExitFailure;
}
