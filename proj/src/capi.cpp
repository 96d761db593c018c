#include "tvcache/tvcache.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "tvcache/config.hpp"
#include "tvcache/engine.hpp"
#include "tvcache/error.hpp"
#include "tvcache/policy.hpp"

struct tvc_scenario {
    tvc::ScenarioConfig config;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_key;

tvc_status fail(tvc_status code, std::string message, std::string key = {}) {
    g_last_error = std::move(message);
    g_last_key = std::move(key);
    return code;
}

template <class Fn>
tvc_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        g_last_key.clear();
        return fn();
    } catch (const tvc::ConfigError& e) {
        return fail(TVC_ERR_CONFIG, e.what(), e.key());
    } catch (const tvc::InvalidArgument& e) {
        return fail(TVC_ERR_INVALID_ARGUMENT, e.what());
    } catch (const tvc::IoError& e) {
        return fail(TVC_ERR_IO, e.what());
    } catch (const tvc::NumericError& e) {
        return fail(TVC_ERR_NUMERIC, e.what());
    } catch (const std::exception& e) {
        return fail(TVC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(TVC_ERR_INTERNAL, "unknown error");
    }
}

tvc_status copy_out(const std::string& text, char* buf, size_t buf_size, size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (buf && buf_size > 0) {
        const size_t n = std::min(buf_size - 1, text.size());
        std::memcpy(buf, text.data(), n);
        buf[n] = '\0';
    }
    return TVC_OK;
}

std::filesystem::path output_dir(const tvc::ScenarioConfig& c) {
    std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw tvc::IoError("cannot create output directory '" + c.output_dir + "': " + ec.message());
    return dir;
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw tvc::IoError("cannot write '" + path.string() + "'");
    fn(os);
    if (!os) throw tvc::IoError("write failed for '" + path.string() + "'");
}

void copy_rows(const std::vector<tvc::StrategySummary>& src, tvc_summary_row* rows, size_t max_rows, size_t* n_rows) {
    if (n_rows) *n_rows = src.size();
    if (!rows) return;
    for (size_t i = 0; i < src.size() && i < max_rows; ++i) {
        auto& r = rows[i];
        const auto label = src[i].strategy.label();
        std::memset(r.strategy, 0, sizeof r.strategy);
        std::memcpy(r.strategy, label.data(), std::min(label.size(), sizeof r.strategy - 1));
        r.cache_size = src[i].cache_size;
        r.mean_offloading_loss = src[i].mean_offloading_loss;
        r.fetching_cost = src[i].fetching_cost;
        r.downloads_per_update = src[i].downloads_per_update;
        r.updates_per_replication = src[i].updates_per_replication;
        r.replications = src[i].replications;
    }
}

tvc_status load_into(tvc::ScenarioConfig cfg, tvc_scenario** out) {
    *out = new tvc_scenario{std::move(cfg)};
    return TVC_OK;
}

#define TVC_REQUIRE(cond, msg) \
    if (!(cond)) return fail(TVC_ERR_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* tvc_last_error(void) { return g_last_error.c_str(); }
const char* tvc_last_error_key(void) { return g_last_key.c_str(); }
const char* tvc_version(void) { return "1.0.0"; }

tvc_status tvc_scenario_load_file(const char* path, tvc_scenario** out) {
    TVC_REQUIRE(path && out, "tvc_scenario_load_file: null argument");
    return guarded([&] { return load_into(tvc::load_config_file(path), out); });
}

tvc_status tvc_scenario_load_string(const char* json_text, tvc_scenario** out) {
    TVC_REQUIRE(json_text && out, "tvc_scenario_load_string: null argument");
    return guarded([&] { return load_into(tvc::parse_config(json_text), out); });
}

tvc_status tvc_scenario_load_preset(const char* name, tvc_scenario** out) {
    TVC_REQUIRE(name && out, "tvc_scenario_load_preset: null argument");
    return guarded([&] { return load_into(tvc::load_preset(name), out); });
}

void tvc_scenario_free(tvc_scenario* scenario) { delete scenario; }

tvc_status tvc_preset_json(const char* name, char* buf, size_t buf_size, size_t* needed) {
    TVC_REQUIRE(name, "tvc_preset_json: null name");
    return guarded([&] { return copy_out(tvc::preset_json(name), buf, buf_size, needed); });
}

tvc_status tvc_preset_names(char* buf, size_t buf_size, size_t* needed) {
    return guarded([&] {
        std::string text;
        for (const auto& n : tvc::preset_names()) text += n + "\n";
        return copy_out(text, buf, buf_size, needed);
    });
}

tvc_status tvc_scenario_json(const tvc_scenario* scenario, char* buf, size_t buf_size, size_t* needed) {
    TVC_REQUIRE(scenario, "tvc_scenario_json: null scenario");
    return guarded([&] { return copy_out(tvc::config_to_json(scenario->config), buf, buf_size, needed); });
}

tvc_status tvc_scenario_set_seed(tvc_scenario* scenario, uint64_t seed) {
    TVC_REQUIRE(scenario, "tvc_scenario_set_seed: null scenario");
    scenario->config.seed.seed = seed;
    return TVC_OK;
}

tvc_status tvc_scenario_set_replications(tvc_scenario* scenario, uint32_t replications) {
    TVC_REQUIRE(scenario, "tvc_scenario_set_replications: null scenario");
    if (replications < 1) return fail(TVC_ERR_CONFIG, "replications: must be ≥ 1", "replications");
    scenario->config.replications = replications;
    return TVC_OK;
}

tvc_status tvc_scenario_set_output_dir(tvc_scenario* scenario, const char* dir) {
    TVC_REQUIRE(scenario && dir, "tvc_scenario_set_output_dir: null argument");
    scenario->config.output_dir = dir;
    return TVC_OK;
}

tvc_status tvc_scenario_set_threads(tvc_scenario* scenario, uint32_t threads) {
    TVC_REQUIRE(scenario, "tvc_scenario_set_threads: null scenario");
    if (threads < 1) return fail(TVC_ERR_CONFIG, "threads: must be ≥ 1", "threads");
    scenario->config.threads = threads;
    return TVC_OK;
}

tvc_status tvc_scenario_set_bounds_grid(tvc_scenario* scenario, const int64_t* t, size_t n_t, const int64_t* T,
                                        size_t n_T, const double* delta, size_t n_delta) {
    TVC_REQUIRE(scenario, "tvc_scenario_set_bounds_grid: null scenario");
    return guarded([&] {
        auto cfg = scenario->config;
        if (t) cfg.bounds.t_grid.assign(t, t + n_t);
        if (T) cfg.bounds.T_grid.assign(T, T + n_T);
        if (delta) cfg.bounds.delta_grid.assign(delta, delta + n_delta);
        tvc::validate_config(cfg);
        scenario->config = std::move(cfg);
        return TVC_OK;
    });
}

tvc_status tvc_scenario_set_cache_sizes(tvc_scenario* scenario, const uint32_t* sizes, size_t n) {
    TVC_REQUIRE(scenario && (sizes || n == 0), "tvc_scenario_set_cache_sizes: null argument");
    if (n == 0) return fail(TVC_ERR_CONFIG, "sweep.cache_sizes: list is empty", "sweep.cache_sizes");
    return guarded([&] {
        auto cfg = scenario->config;
        cfg.sweep_cache_sizes.assign(sizes, sizes + n);
        tvc::validate_config(cfg);
        scenario->config = std::move(cfg);
        return TVC_OK;
    });
}

tvc_status tvc_scenario_validate(const tvc_scenario* scenario) {
    TVC_REQUIRE(scenario, "tvc_scenario_validate: null scenario");
    return guarded([&] {
        tvc::validate_config(scenario->config);
        return TVC_OK;
    });
}

tvc_status tvc_run(const tvc_scenario* scenario, tvc_summary_row* rows, size_t max_rows, size_t* n_rows) {
    TVC_REQUIRE(scenario, "tvc_run: null scenario");
    return guarded([&] {
        const auto& cfg = scenario->config;
        tvc::validate_config(cfg);
        auto stream = tvc::RngStream(cfg.seed).split("run");
        const auto cmp = tvc::compare_strategies(cfg, cfg.strategies, stream);
        const auto dir = output_dir(cfg);
        write_file(dir / "results.csv", [&](std::ostream& os) { tvc::write_results_csv(os, cmp); });
        write_file(dir / "updates.csv", [&](std::ostream& os) { tvc::write_updates_csv(os, cmp); });
        write_file(dir / "summary.csv", [&](std::ostream& os) { tvc::write_summary_csv(os, cmp.summary); });
        copy_rows(cmp.summary, rows, max_rows, n_rows);
        return TVC_OK;
    });
}

tvc_status tvc_sweep(const tvc_scenario* scenario, tvc_summary_row* rows, size_t max_rows, size_t* n_rows) {
    TVC_REQUIRE(scenario, "tvc_sweep: null scenario");
    return guarded([&] {
        const auto& cfg = scenario->config;
        tvc::validate_config(cfg);
        auto stream = tvc::RngStream(cfg.seed).split("sweep");
        const auto sweep = tvc::run_sweep(cfg, cfg.sweep_cache_sizes, stream);
        const auto dir = output_dir(cfg);
        write_file(dir / "sweep.csv", [&](std::ostream& os) { tvc::write_summary_csv(os, sweep.rows); });
        copy_rows(sweep.rows, rows, max_rows, n_rows);
        return TVC_OK;
    });
}

tvc_status tvc_bounds(const tvc_scenario* scenario, size_t* n_rows, size_t* n_infeasible) {
    TVC_REQUIRE(scenario, "tvc_bounds: null scenario");
    return guarded([&] {
        const auto& cfg = scenario->config;
        auto stream = tvc::RngStream(cfg.seed).split("bounds");
        const auto rows = tvc::run_bounds_grid(cfg, stream);
        const auto dir = output_dir(cfg);
        write_file(dir / "bounds.csv", [&](std::ostream& os) { tvc::write_bounds_csv(os, rows); });
        if (n_rows) *n_rows = rows.size();
        if (n_infeasible) {
            *n_infeasible = 0;
            for (const auto& r : rows) *n_infeasible += r.report.feasible ? 0 : 1;
        }
        return TVC_OK;
    });
}

tvc_status tvc_g(const tvc_scenario* scenario, double pi, double* out) {
    TVC_REQUIRE(scenario && out, "tvc_g: null argument");
    TVC_REQUIRE(pi >= 0.0 && pi <= 1.0, "tvc_g: pi must lie in [0, 1]");
    return guarded([&] {
        *out = tvc::g_of(pi, scenario->config.params);
        return TVC_OK;
    });
}

tvc_status tvc_closed_form_loss(const tvc_scenario* scenario, const double* policy, const double* profile, size_t n,
                                double* out) {
    TVC_REQUIRE(scenario && policy && profile && out, "tvc_closed_form_loss: null argument");
    return guarded([&] {
        const tvc::CachingPolicy pol{std::vector<double>(policy, policy + n)};
        const tvc::PopularityProfile prof{std::vector<double>(profile, profile + n), 0};
        if (!tvc::is_probability_vector(pol.probs) || !tvc::is_probability_vector(prof.probs)) {
            throw tvc::InvalidArgument("tvc_closed_form_loss: policy and profile must be probability vectors");
        }
        *out = tvc::closed_form_loss(pol, prof, scenario->config.params);
        return TVC_OK;
    });
}

tvc_status tvc_optimize_policy(const tvc_scenario* scenario, const double* profile, size_t n, uint64_t seed,
                               double* policy_out, double* objective) {
    TVC_REQUIRE(scenario && profile && policy_out, "tvc_optimize_policy: null argument");
    TVC_REQUIRE(n > 0, "tvc_optimize_policy: empty profile");
    return guarded([&] {
        tvc::PopularityProfile prof{std::vector<double>(profile, profile + n), 0};
        if (!tvc::is_probability_vector(prof.probs)) throw tvc::InvalidArgument("tvc_optimize_policy: profile is not a probability vector");
        tvc::RngStream stream{tvc::RngSeed{seed}};
        const auto rep = tvc::optimize_policy(tvc::LossObjective::from_profile(prof, scenario->config.params),
                                              scenario->config.optimizer, stream);
        std::copy(rep.policy.probs.begin(), rep.policy.probs.end(), policy_out);
        if (objective) *objective = rep.objective_value;
        return TVC_OK;
    });
}

}  // extern "C"
