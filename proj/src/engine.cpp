#include "tvcache/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "tvcache/error.hpp"
#include "tvcache/io.hpp"
#include "tvcache/parallel.hpp"

namespace tvc {

UpdateStrategy UpdateStrategy::make_threshold(double threshold, std::int64_t window) {
    return UpdateStrategy{StrategyKind::threshold, threshold, window, 1};
}

UpdateStrategy UpdateStrategy::make_periodic(std::int64_t period) {
    return UpdateStrategy{StrategyKind::periodic, 0.0, 1, period};
}

UpdateStrategy UpdateStrategy::make_never() { return UpdateStrategy{}; }

std::string UpdateStrategy::label() const {
    switch (kind) {
        case StrategyKind::threshold: return "threshold:" + format_double(threshold) + ":" + std::to_string(window);
        case StrategyKind::periodic: return "periodic:" + std::to_string(period);
        case StrategyKind::never: break;
    }
    return "never";
}

void validate_strategy(const UpdateStrategy& s) {
    switch (s.kind) {
        case StrategyKind::threshold:
            if (!(s.threshold > 0.0) || !std::isfinite(s.threshold)) throw InvalidArgument("threshold must be positive");
            if (s.window < 1) throw InvalidArgument("window must be ≥ 1");
            break;
        case StrategyKind::periodic:
            if (s.period < 1) throw InvalidArgument("period must be ≥ 1");
            break;
        case StrategyKind::never: break;
    }
}

namespace {

template <class Fn>
void wrap_config(const std::string& key, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
}

}  // namespace

void validate_config(const ScenarioConfig& c) {
    try {
        validate_params(c.params);
    } catch (const InvalidArgument& e) {
        // Messages lead with the field name.
        const std::string what = e.what();
        throw ConfigError("params." + what.substr(0, what.find(' ')), what);
    }
    if (!(c.zipf_theta >= 0.0) || !std::isfinite(c.zipf_theta)) throw ConfigError("dynamics.zipf_theta", "must be ≥ 0");
    wrap_config("dynamics", [&] { validate_dynamics(resolved_dynamics(c)); });
    if (c.beta) {
        if (!(c.beta->C >= 0.0) || !(c.beta->rho >= 0.0 && c.beta->rho <= 1.0)) {
            throw ConfigError("dynamics.beta", "need C ≥ 0 and rho in [0, 1]");
        }
    }
    wrap_config("arrivals", [&] { validate_arrivals(c.arrivals); });
    if (c.strategies.empty()) throw ConfigError("strategies", "at least one strategy is required");
    for (std::size_t i = 0; i < c.strategies.size(); ++i) {
        wrap_config("strategies[" + std::to_string(i) + "]", [&] { validate_strategy(c.strategies[i]); });
    }
    if (c.estimator_window < 1) throw ConfigError("estimator.window", "must be ≥ 1");
    if (c.horizon < 1) throw ConfigError("horizon", "must be ≥ 1");
    if (c.replications < 1) throw ConfigError("replications", "must be ≥ 1");
    if (c.threads < 1) throw ConfigError("threads", "must be ≥ 1");
    if (!(c.optimizer.tol > 0.0)) throw ConfigError("optimizer.tol", "must be positive");
    if (c.optimizer.max_restarts < 1) throw ConfigError("optimizer.max_restarts", "must be ≥ 1");
    for (auto m : c.sweep_cache_sizes) {
        if (m < 1) throw ConfigError("sweep.cache_sizes", "every cache size must be ≥ 1");
    }
    const auto& b = c.bounds;
    if (b.t_grid.empty()) throw ConfigError("bounds.t", "grid is empty");
    if (b.T_grid.empty()) throw ConfigError("bounds.T", "grid is empty");
    if (b.delta_grid.empty()) throw ConfigError("bounds.delta", "grid is empty");
    for (auto t : b.t_grid) {
        if (t < 2) throw ConfigError("bounds.t", "every t must be ≥ 2");
        if (b.block_length > t) throw ConfigError("bounds.block_length", "exceeds t = " + std::to_string(t));
    }
    for (auto T : b.T_grid) {
        if (T < 0) throw ConfigError("bounds.T", "every T must be ≥ 0");
    }
    for (auto d : b.delta_grid) {
        if (!(d > 0.0 && d < 1.0)) throw ConfigError("bounds.delta", "every delta must lie in (0, 1)");
    }
    if (b.block_length < 0) throw ConfigError("bounds.block_length", "must be ≥ 0");
    if (b.n_sigma < 1) throw ConfigError("bounds.n_sigma", "must be ≥ 1");
    if (b.alpha_min && !(*b.alpha_min > 0.0 && *b.alpha_min <= 1.0)) throw ConfigError("bounds.alpha_min", "must lie in (0, 1]");
    if (b.alpha_max && !(*b.alpha_max > 0.0 && *b.alpha_max <= 1.0)) throw ConfigError("bounds.alpha_max", "must lie in (0, 1]");
    if (b.alpha_min && b.alpha_max && *b.alpha_min > *b.alpha_max) {
        throw ConfigError("bounds.alpha_min", "must not exceed bounds.alpha_max");
    }
}

PopularityDynamics resolved_dynamics(const ScenarioConfig& config) {
    PopularityDynamics dyn = config.dynamics;
    if (dyn.mode == DynamicsMode::explicit_sequence) {
        for (const auto& p : dyn.sequence) {
            if (p.size() != config.params.N) throw InvalidArgument("explicit profile length differs from N");
        }
        return dyn;
    }
    dyn.base = zipf_profile(config.params.N, config.zipf_theta);
    return dyn;
}

ReplicationInputs prepare_replication(const ScenarioConfig& config, std::int64_t horizon, RngStream& stream) {
    ReplicationInputs in;
    auto geometry = stream.split("geometry");
    auto dynamics = stream.split("dynamics");
    auto traffic = stream.split("traffic");
    in.network = sample_network(config.params, geometry);
    in.profiles = evolve_popularity(resolved_dynamics(config), horizon, dynamics);
    in.trace = generate_trace(in.profiles, config.arrivals, static_cast<std::uint32_t>(in.network.user_positions.size()),
                              config.params, horizon, traffic);
    in.trace.n_files = config.params.N;
    if (config.loss_evaluation == LossEvaluation::empirical) {
        in.user_neighbors.reserve(in.network.user_positions.size());
        for (const auto& u : in.network.user_positions) {
            in.user_neighbors.push_back(neighbors(u, in.network.sbs_positions, config.params.gamma));
        }
    }
    return in;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double finite_mean(const std::vector<double>& v) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    }
    return n == 0 ? kNaN : sum / static_cast<double>(n);
}

using CacheSet = std::vector<std::vector<std::uint32_t>>;

std::vector<std::vector<char>> membership(const CacheSet& caches, std::uint32_t n_files) {
    std::vector<std::vector<char>> has(caches.size(), std::vector<char>(n_files, 0));
    for (std::size_t k = 0; k < caches.size(); ++k) {
        for (auto f : caches[k]) has[k][f] = 1;
    }
    return has;
}

}  // namespace

ScenarioResult run_strategy(const ScenarioConfig& config, const ReplicationInputs& inputs,
                            const UpdateStrategy& strategy, RngStream& stream) {
    const auto& params = config.params;
    const auto horizon = static_cast<std::int64_t>(inputs.profiles.size());
    const auto n_sbs = inputs.network.sbs_positions.size();

    const auto policy_rng = stream.split("policy").split(strategy.label());
    auto opt_rng = policy_rng.split("optimizer");
    auto cache_rng = policy_rng.split("caches");
    auto disc_rng = policy_rng.split("discrepancy");

    ScenarioResult res;
    res.strategy = strategy;
    res.offloading_loss.assign(static_cast<std::size_t>(horizon), kNaN);
    res.discrepancy_hat.assign(static_cast<std::size_t>(horizon), kNaN);

    const FileCountIndex index(inputs.trace, horizon);
    std::vector<const SlotRecord*> by_slot(static_cast<std::size_t>(horizon), nullptr);
    for (const auto& rec : inputs.trace.slots) {
        if (rec.slot >= 0 && rec.slot < horizon) by_slot[static_cast<std::size_t>(rec.slot)] = &rec;
    }

    auto policy = CachingPolicy::uniform(params.N);
    auto caches = materialize_caches(policy, n_sbs, params.M, cache_rng);
    auto has = membership(caches, params.N);
    res.policies.emplace_back(0, policy);

    auto current_estimate = [&](std::int64_t t) {
        switch (config.estimator) {
            case EstimatorKind::windowed:
                return profile_from_counts(index.counts(t - config.estimator_window, t), t - 1);
            case EstimatorKind::oracle: return inputs.profiles[static_cast<std::size_t>(t - 1)];
            case EstimatorKind::full_history: break;
        }
        return profile_from_counts(index.counts(0, t), t - 1);
    };

    // The estimate the current caches were built from; uniform at start.
    PopularityProfile reference{std::vector<double>(params.N, 1.0 / params.N), 0};
    std::int64_t last_update = 0;

    for (std::int64_t t = 0; t < horizon; ++t) {
        bool update = false;
        std::optional<PopularityProfile> estimate;
        switch (strategy.kind) {
            case StrategyKind::periodic:
                update = t > 0 && t % strategy.period == 0;
                break;
            case StrategyKind::threshold:
                if (t > 0 && t - last_update >= strategy.window) {
                    estimate = current_estimate(t);
                    const auto d = discrepancy_between(*estimate, reference, params, config.optimizer, disc_rng);
                    res.discrepancy_hat[static_cast<std::size_t>(t)] = d.value;
                    update = d.value > strategy.threshold;
                }
                break;
            case StrategyKind::never: break;
        }

        if (update) {
            if (!estimate) estimate = current_estimate(t);
            auto report = optimize_policy(LossObjective::from_profile(*estimate, params), config.optimizer, opt_rng);
            policy = std::move(report.policy);
            auto next = materialize_caches(policy, n_sbs, params.M, cache_rng);
            UpdateEvent ev;
            ev.slot = t;
            ev.n_sbs = n_sbs;
            for (std::size_t k = 0; k < n_sbs; ++k) ev.files_downloaded_total += multiset_difference_size(next[k], caches[k]);
            ev.files_downloaded_mean =
                n_sbs == 0 ? 0.0 : static_cast<double>(ev.files_downloaded_total) / static_cast<double>(n_sbs);
            res.updates.push_back(ev);
            caches = std::move(next);
            has = membership(caches, params.N);
            res.policies.emplace_back(t, policy);
            reference = std::move(*estimate);
            last_update = t;
        }

        auto& loss = res.offloading_loss[static_cast<std::size_t>(t)];
        if (config.loss_evaluation == LossEvaluation::closed_form) {
            loss = closed_form_loss(policy, inputs.profiles[static_cast<std::size_t>(t)], params);
        } else if (const auto* rec = by_slot[static_cast<std::size_t>(t)]; rec && !rec->requests.empty()) {
            std::size_t misses = 0;
            for (const auto& r : rec->requests) {
                bool hit = false;
                for (auto k : inputs.user_neighbors[r.user].sbs_indices) {
                    if (has[k][r.file]) {
                        hit = true;
                        break;
                    }
                }
                misses += hit ? 0 : 1;
            }
            loss = params.miss_cost() * static_cast<double>(misses) / static_cast<double>(rec->requests.size());
        }
    }

    res.total_updates = res.updates.size();
    res.mean_offloading_loss = finite_mean(res.offloading_loss);
    double downloads = 0.0;
    for (const auto& ev : res.updates) downloads += ev.files_downloaded_mean;
    res.downloads_per_update = res.updates.empty() ? 0.0 : downloads / static_cast<double>(res.updates.size());
    // Slots 1..horizon-1 are the update opportunities.
    res.fetching_cost = horizon > 1 ? downloads / static_cast<double>(horizon - 1) : 0.0;
    return res;
}

ScenarioResult run_scenario(const ScenarioConfig& config, RngStream& stream) {
    validate_config(config);
    const auto inputs = prepare_replication(config, config.horizon, stream);
    return run_strategy(config, inputs, config.strategies.front(), stream);
}

Comparison compare_strategies(const ScenarioConfig& config, const std::vector<UpdateStrategy>& strategies,
                              RngStream& stream) {
    if (strategies.empty()) throw InvalidArgument("compare_strategies: no strategies");
    for (const auto& s : strategies) validate_strategy(s);

    Comparison cmp;
    cmp.runs.resize(config.replications);
    parallel_for(config.replications, config.threads, [&](std::size_t r) {
        auto rep = stream.split(static_cast<std::uint64_t>(r));
        const auto inputs = prepare_replication(config, config.horizon, rep);
        auto& row = cmp.runs[r];
        row.reserve(strategies.size());
        for (const auto& s : strategies) row.push_back(run_strategy(config, inputs, s, rep));
    });

    const double reps = static_cast<double>(config.replications);
    for (std::size_t k = 0; k < strategies.size(); ++k) {
        StrategySummary sum;
        sum.strategy = strategies[k];
        sum.cache_size = config.params.M;
        sum.replications = config.replications;
        for (const auto& row : cmp.runs) {
            sum.mean_offloading_loss += row[k].mean_offloading_loss;
            sum.fetching_cost += row[k].fetching_cost;
            sum.downloads_per_update += row[k].downloads_per_update;
            sum.updates_per_replication += static_cast<double>(row[k].total_updates);
        }
        sum.mean_offloading_loss /= reps;
        sum.fetching_cost /= reps;
        sum.downloads_per_update /= reps;
        sum.updates_per_replication /= reps;
        cmp.summary.push_back(sum);
    }
    return cmp;
}

SweepResult run_sweep(const ScenarioConfig& config, const std::vector<std::uint32_t>& cache_sizes, RngStream& stream) {
    if (cache_sizes.empty()) throw ConfigError("sweep.cache_sizes", "list is empty");
    SweepResult out;
    for (auto M : cache_sizes) {
        if (M < 1) throw ConfigError("sweep.cache_sizes", "every cache size must be ≥ 1");
        auto cfg = config;
        cfg.params.M = M;
        const auto cmp = compare_strategies(cfg, cfg.strategies, stream);
        out.rows.insert(out.rows.end(), cmp.summary.begin(), cmp.summary.end());
    }
    return out;
}

GapResult offloading_loss_gap(std::int64_t t, std::int64_t T, const std::vector<PopularityProfile>& profiles,
                              const RequestTrace& trace, const SystemParams& params, const OptimizerOptions& options,
                              RngStream& stream, const std::optional<PopularityProfile>& estimate) {
    if (t < 1) throw InvalidArgument("offloading_loss_gap: t must be ≥ 1");
    if (T < 0) throw InvalidArgument("offloading_loss_gap: T must be ≥ 0");
    const auto target = static_cast<std::size_t>(t - 1 + T);
    if (target >= profiles.size()) throw InvalidArgument("offloading_loss_gap: profiles do not reach slot t - 1 + T");

    const auto& truth = profiles[target];
    const auto est = estimate ? *estimate : empirical_popularity(trace, t);
    auto stale_rng = stream.split("stale");
    auto optimal_rng = stream.split("optimal");

    GapResult g;
    g.stale_policy = optimize_policy(LossObjective::from_profile(est, params), options, stale_rng).policy;
    g.optimal_policy = optimize_policy(LossObjective::from_profile(truth, params), options, optimal_rng).policy;
    g.stale_loss = closed_form_loss(g.stale_policy, truth, params);
    g.optimal_loss = closed_form_loss(g.optimal_policy, truth, params);
    g.gap = g.stale_loss - g.optimal_loss;
    return g;
}

GapResult offloading_loss_gap(std::int64_t t, std::int64_t T, const ScenarioConfig& config, RngStream& stream) {
    auto data_rng = stream.split("data");
    const auto data = prepare_replication(config, t + T, data_rng);
    return offloading_loss_gap(t, T, data.profiles, data.trace, config.params, config.optimizer, stream);
}

BoundInputs make_bound_inputs(const ScenarioConfig& config, std::int64_t t, std::int64_t T, double delta,
                              const ReplicationInputs* data, RngStream& stream) {
    const auto& b = config.bounds;
    BoundInputs in;
    in.params = config.params;
    in.t = t;
    in.T = T;
    in.delta = delta;
    in.model = b.model;
    in.request_model = config.arrivals;
    in.schedule = make_blocks(t, b.block_length);

    GeometricBeta beta;
    if (config.beta) {
        beta = *config.beta;
    } else {
        wrap_config("dynamics.beta", [&] { beta = analytic_beta(resolved_dynamics(config)); });
    }
    in.beta = beta;

    if (b.model == BoundModel::poisson || (config.arrivals.kind == ArrivalKind::poisson && !b.alpha_min)) {
        const auto env = poisson_alphas(config.arrivals.lambda_r, config.params.delta_slot);
        in.alpha_min = env.alpha_min;
        in.alpha_max = std::min(1.0, env.alpha_max);
    }
    if (b.model != BoundModel::poisson) {
        if (b.alpha_min) in.alpha_min = *b.alpha_min;
        if (b.alpha_max) in.alpha_max = *b.alpha_max;
        if (config.arrivals.kind == ArrivalKind::bernoulli && (!b.alpha_min || !b.alpha_max)) {
            throw ConfigError("bounds.alpha_min", "alpha_min and alpha_max are required for Bernoulli arrivals");
        }
    }

    const bool need_data = !b.rademacher || !b.discrepancy;
    std::optional<BlockView> view;
    if (need_data) {
        if (data == nullptr) throw InvalidArgument("make_bound_inputs: estimates requested without data");
        view = split_even_odd(data->trace, in.schedule);
    }
    if (b.rademacher) {
        in.rademacher_even = b.rademacher->first;
        in.rademacher_odd = b.rademacher->second;
    } else {
        RademacherOptions opts;
        opts.n_sigma = b.n_sigma;
        opts.optimizer = config.optimizer;
        auto rng = stream.split("rademacher");
        const auto est = empirical_rademacher(*view, config.params, opts, rng);
        in.rademacher_even = est.even.value;
        in.rademacher_odd = est.odd.value;
    }
    if (b.discrepancy) {
        in.discrepancy_even = b.discrepancy->first;
        in.discrepancy_odd = b.discrepancy->second;
    } else {
        const auto target = static_cast<std::size_t>(t - 1 + T);
        if (target >= data->profiles.size()) throw InvalidArgument("make_bound_inputs: profiles do not reach t - 1 + T");
        auto rng = stream.split("discrepancy");
        const auto d = true_discrepancy(*view, data->profiles, data->profiles[target], config.params, config.optimizer, rng);
        in.discrepancy_even = d.even.value;
        in.discrepancy_odd = d.odd.value;
    }
    return in;
}

std::vector<BoundRow> run_bounds_grid(const ScenarioConfig& config, RngStream& stream) {
    validate_config(config);
    const auto& b = config.bounds;
    std::optional<ReplicationInputs> data;
    if (!b.rademacher || !b.discrepancy) {
        const auto horizon = *std::max_element(b.t_grid.begin(), b.t_grid.end()) +
                             *std::max_element(b.T_grid.begin(), b.T_grid.end());
        auto rng = stream.split("data");
        data = prepare_replication(config, horizon, rng);
    }
    std::vector<BoundRow> rows;
    for (auto t : b.t_grid) {
        for (auto T : b.T_grid) {
            auto rng = stream.split("point").split(static_cast<std::uint64_t>(t)).split(static_cast<std::uint64_t>(T));
            auto in = make_bound_inputs(config, t, T, b.delta_grid.front(), data ? &*data : nullptr, rng);
            for (auto delta : b.delta_grid) {
                in.delta = delta;
                rows.push_back(BoundRow{t, T, delta, in.schedule, epsilon_bound(in)});
            }
        }
    }
    return rows;
}

PacTrial pac_trial(const ScenarioConfig& config, std::int64_t t, std::int64_t T, double delta, RngStream& stream) {
    auto data_rng = stream.split("data");
    const auto data = prepare_replication(config, t + T, data_rng);
    auto gap_rng = stream.split("gap");
    auto bound_rng = stream.split("bound");
    PacTrial trial;
    trial.gap = offloading_loss_gap(t, T, data.profiles, data.trace, config.params, config.optimizer, gap_rng);
    trial.bound = epsilon_bound(make_bound_inputs(config, t, T, delta, &data, bound_rng));
    trial.violated = trial.bound.feasible && trial.gap.gap > trial.bound.epsilon;
    return trial;
}

namespace {

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string{}; }

}  // namespace

void write_results_csv(std::ostream& os, const Comparison& cmp) {
    os << kResultsHeader << '\n';
    for (std::size_t r = 0; r < cmp.runs.size(); ++r) {
        for (const auto& res : cmp.runs[r]) {
            const auto label = res.strategy.label();
            std::size_t next_update = 0;
            for (std::size_t t = 0; t < res.offloading_loss.size(); ++t) {
                bool updated = false;
                if (next_update < res.updates.size() && res.updates[next_update].slot == static_cast<std::int64_t>(t)) {
                    updated = true;
                    ++next_update;
                }
                os << r << ',' << label << ',' << t << ',' << cell(res.offloading_loss[t]) << ','
                   << cell(res.discrepancy_hat[t]) << ',' << (updated ? 1 : 0) << '\n';
            }
        }
    }
}

void write_updates_csv(std::ostream& os, const Comparison& cmp) {
    os << kUpdatesHeader << '\n';
    for (std::size_t r = 0; r < cmp.runs.size(); ++r) {
        for (const auto& res : cmp.runs[r]) {
            const auto label = res.strategy.label();
            for (const auto& ev : res.updates) {
                os << r << ',' << label << ',' << ev.slot << ',' << cell(ev.files_downloaded_mean) << ','
                   << ev.files_downloaded_total << ',' << ev.n_sbs << '\n';
            }
        }
    }
}

void write_summary_csv(std::ostream& os, const std::vector<StrategySummary>& rows) {
    os << kSummaryHeader << '\n';
    for (const auto& s : rows) {
        os << s.strategy.label() << ',' << s.cache_size << ',' << cell(s.mean_offloading_loss) << ','
           << cell(s.fetching_cost) << ',' << cell(s.downloads_per_update) << ',' << cell(s.updates_per_replication)
           << ',' << s.replications << '\n';
    }
}

void write_bounds_csv(std::ostream& os, const std::vector<BoundRow>& rows) {
    os << kBoundsHeader << '\n';
    for (const auto& row : rows) {
        const auto& rep = row.report;
        os << row.t << ',' << row.T << ',' << format_double(row.delta) << ',' << to_string(rep.model) << ','
           << row.schedule.lengths.size() << ',' << row.schedule.a_min() << ',' << row.schedule.a_max() << ','
           << cell(rep.terms.rademacher_term) << ',' << cell(rep.terms.discrepancy_term) << ','
           << cell(rep.terms.deviation_term) << ',' << cell(rep.epsilon) << ',' << cell(rep.terms.void_term) << ','
           << cell(rep.terms.mixing_term) << ',' << cell(rep.terms.request_count_term) << ','
           << cell(rep.delta_prime) << ',' << (rep.feasible ? 1 : 0) << ',' << rep.truncation << '\n';
    }
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::windowed: return "windowed";
        case EstimatorKind::oracle: return "oracle";
        case EstimatorKind::full_history: break;
    }
    return "full-history";
}

std::string to_string(LossEvaluation e) { return e == LossEvaluation::empirical ? "empirical" : "closed-form"; }

}  // namespace tvc
