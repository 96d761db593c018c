#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tvcache/bounds.hpp"
#include "tvcache/estimator.hpp"
#include "tvcache/model.hpp"
#include "tvcache/policy.hpp"
#include "tvcache/rng.hpp"
#include "tvcache/spatial.hpp"
#include "tvcache/traffic.hpp"

namespace tvc {

enum class StrategyKind { threshold, periodic, never };

struct UpdateStrategy {
    StrategyKind kind = StrategyKind::never;
    double threshold = 0.0;    ///< loss units (threshold kind)
    std::int64_t window = 1;   ///< minimum slots between threshold updates
    std::int64_t period = 1;   ///< slots between updates (periodic kind)

    static UpdateStrategy make_threshold(double threshold, std::int64_t window);
    static UpdateStrategy make_periodic(std::int64_t period);
    static UpdateStrategy make_never();

    /// Stable comma-free text form: `threshold:0.04:1`, `periodic:5`, `never`.
    std::string label() const;
    bool operator==(const UpdateStrategy&) const = default;
};

void validate_strategy(const UpdateStrategy& s);

enum class EstimatorKind { full_history, windowed, oracle };
enum class LossEvaluation { closed_form, empirical };

struct BoundsSettings {
    BoundModel model = BoundModel::general;
    std::vector<std::int64_t> t_grid{400};
    std::vector<std::int64_t> T_grid{0};
    std::vector<double> delta_grid{0.1};
    std::int64_t block_length = 0;  ///< 0 selects ceil(sqrt(t))
    /// Fixed (R_e, R_o); empty means estimate from the simulated trace.
    std::optional<std::pair<double, double>> rademacher;
    /// Fixed (Delta_e, Delta_o); empty means compute from the true profiles.
    std::optional<std::pair<double, double>> discrepancy;
    unsigned n_sigma = 64;
    std::optional<double> alpha_min;
    std::optional<double> alpha_max;

    bool operator==(const BoundsSettings&) const = default;
};

struct ScenarioConfig {
    SystemParams params;
    double zipf_theta = 0.8;
    PopularityDynamics dynamics;  ///< base is rebuilt from zipf_theta unless explicit
    std::optional<GeometricBeta> beta;  ///< overrides the analytic mixing bound
    ArrivalModel arrivals;
    std::vector<UpdateStrategy> strategies;
    EstimatorKind estimator = EstimatorKind::full_history;
    std::int64_t estimator_window = 100;
    LossEvaluation loss_evaluation = LossEvaluation::closed_form;
    std::int64_t horizon = 1000;
    std::uint32_t replications = 1;
    RngSeed seed{1};
    std::string output_dir = "out";
    unsigned threads = 1;
    OptimizerOptions optimizer{1e-8, 8, 2000};
    std::vector<std::uint32_t> sweep_cache_sizes;
    BoundsSettings bounds;
};

/// Throws ConfigError naming the offending key.
void validate_config(const ScenarioConfig& config);

/// Fills dynamics.base from zipf_theta and N (except for explicit sequences).
PopularityDynamics resolved_dynamics(const ScenarioConfig& config);

/// The randomness shared by all strategies of one replication.
struct ReplicationInputs {
    std::vector<PopularityProfile> profiles;
    RequestTrace trace;
    PppRealization network;
    std::vector<Neighborhood> user_neighbors;  ///< filled for empirical loss evaluation
};

/// Draws the network, popularity path and request trace from the
/// `geometry`, `dynamics` and `traffic` children of `stream`.
ReplicationInputs prepare_replication(const ScenarioConfig& config, std::int64_t horizon, RngStream& stream);

struct UpdateEvent {
    std::int64_t slot = 0;
    double files_downloaded_mean = 0.0;  ///< per-sBS multiset difference, averaged over sBSs
    std::uint64_t files_downloaded_total = 0;
    std::size_t n_sbs = 0;
};

struct ScenarioResult {
    UpdateStrategy strategy;
    std::vector<double> offloading_loss;  ///< one per slot
    std::vector<double> discrepancy_hat;  ///< NaN where not evaluated
    std::vector<UpdateEvent> updates;
    std::vector<std::pair<std::int64_t, CachingPolicy>> policies;  ///< slot the policy took effect
    double mean_offloading_loss = 0.0;
    double downloads_per_update = 0.0;  ///< mean files downloaded per sBS per update event
    double fetching_cost = 0.0;         ///< per-sBS downloads per update opportunity (slot)
    std::size_t total_updates = 0;
};

/// One strategy over one replication's shared inputs.
ScenarioResult run_strategy(const ScenarioConfig& config, const ReplicationInputs& inputs,
                            const UpdateStrategy& strategy, RngStream& stream);

/// First configured strategy on a fresh replication drawn from `stream`.
ScenarioResult run_scenario(const ScenarioConfig& config, RngStream& stream);

struct StrategySummary {
    UpdateStrategy strategy;
    std::uint32_t cache_size = 0;
    double mean_offloading_loss = 0.0;
    double fetching_cost = 0.0;
    double downloads_per_update = 0.0;
    double updates_per_replication = 0.0;
    std::uint32_t replications = 0;
};

struct Comparison {
    /// runs[r][k]: replication r, strategy k.
    std::vector<std::vector<ScenarioResult>> runs;
    std::vector<StrategySummary> summary;
};

/// Every strategy sees the same traffic per replication. Replication r uses
/// stream.split(r); strategy policy randomness is keyed by the strategy label.
Comparison compare_strategies(const ScenarioConfig& config, const std::vector<UpdateStrategy>& strategies,
                              RngStream& stream);

struct SweepResult {
    std::vector<StrategySummary> rows;  ///< cache size major, strategy minor
};

/// compare_strategies once per cache size, on the same seed.
SweepResult run_sweep(const ScenarioConfig& config, const std::vector<std::uint32_t>& cache_sizes, RngStream& stream);

struct GapResult {
    double stale_loss = 0.0;    ///< T(policy optimized on the slot-t estimate, P at t+T)
    double optimal_loss = 0.0;  ///< T(policy optimized on the true P at t+T, P at t+T)
    double gap = 0.0;
    CachingPolicy stale_policy;
    CachingPolicy optimal_policy;
};

/// Estimate from slots [0, t) (empirical frequencies), target slot
/// index t - 1 + T. `estimate` overrides the empirical estimate when given.
GapResult offloading_loss_gap(std::int64_t t, std::int64_t T, const std::vector<PopularityProfile>& profiles,
                              const RequestTrace& trace, const SystemParams& params, const OptimizerOptions& options,
                              RngStream& stream, const std::optional<PopularityProfile>& estimate = std::nullopt);

/// Convenience form drawing a fresh replication of horizon t + T.
GapResult offloading_loss_gap(std::int64_t t, std::int64_t T, const ScenarioConfig& config, RngStream& stream);

/// Bound inputs for (t, T, delta) built from the config's bounds settings
/// and, when estimates are requested, one replication's data.
BoundInputs make_bound_inputs(const ScenarioConfig& config, std::int64_t t, std::int64_t T, double delta,
                              const ReplicationInputs* data, RngStream& stream);

struct BoundRow {
    std::int64_t t = 0;
    std::int64_t T = 0;
    double delta = 0.0;
    BlockSchedule schedule;
    BoundReport report;
};

/// One row per (t, T, delta) of the config's grid, t-major.
std::vector<BoundRow> run_bounds_grid(const ScenarioConfig& config, RngStream& stream);

struct PacTrial {
    GapResult gap;
    BoundReport bound;
    bool violated = false;  ///< feasible bound and gap > epsilon
};

/// One paired trial: draw a replication, compute the gap at (t, T) and the
/// bound built from the same data.
PacTrial pac_trial(const ScenarioConfig& config, std::int64_t t, std::int64_t T, double delta, RngStream& stream);

inline constexpr const char* kResultsHeader = "replication,strategy,slot,offloading_loss,discrepancy_hat,updated";
inline constexpr const char* kUpdatesHeader = "replication,strategy,slot,files_downloaded_mean,files_downloaded_total,n_sbs";
inline constexpr const char* kSummaryHeader =
    "strategy,cache_size,mean_offloading_loss,fetching_cost,downloads_per_update,updates_per_replication,replications";
inline constexpr const char* kBoundsHeader =
    "t,T,delta,model,blocks,a_min,a_max,rademacher_term,discrepancy_term,deviation_term,epsilon,"
    "void_term,mixing_term,request_count_term,delta_prime,feasible,truncation";

void write_results_csv(std::ostream& os, const Comparison& cmp);
void write_updates_csv(std::ostream& os, const Comparison& cmp);
void write_summary_csv(std::ostream& os, const std::vector<StrategySummary>& rows);
void write_bounds_csv(std::ostream& os, const std::vector<BoundRow>& rows);

std::string to_string(EstimatorKind k);
std::string to_string(LossEvaluation e);

}  // namespace tvc
