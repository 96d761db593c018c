#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "tvcache/model.hpp"
#include "tvcache/rng.hpp"

namespace tvc {

/// g(pi) = (B/R0) exp(-lambda_g * pi_const * gamma^2 * [1 - (1 - pi)^M]):
/// the expected miss cost of a file cached with probability pi.
double g_of(double pi_i, const SystemParams& params);

/// dg/dpi.
double g_derivative(double pi_i, const SystemParams& params);

/// sum_i g(pi_i) p_i. Throws InvalidArgument on a length mismatch.
double closed_form_loss(const CachingPolicy& policy, const PopularityProfile& profile, const SystemParams& params);

/// Euclidean projection onto {x >= 0, sum x = 1} (sort-and-threshold).
std::vector<double> project_to_simplex(std::span<const double> v);

enum class Direction { minimize, maximize };

/// T(Pi, w) = sum_i g(pi_i) w_i, where w is either a popularity profile or an
/// arbitrary nonnegative weight vector (used for sup_Pi computations).
struct LossObjective {
    std::variant<PopularityProfile, std::vector<double>> weights_source;
    SystemParams params;
    Direction direction = Direction::minimize;

    static LossObjective from_profile(PopularityProfile profile, const SystemParams& params,
                                      Direction dir = Direction::minimize);
    static LossObjective from_weights(std::vector<double> weights, const SystemParams& params,
                                      Direction dir = Direction::maximize);

    std::span<const double> weights() const;
    double value(std::span<const double> pi) const;
    /// value(to) - value(from), accurate when the points are close.
    double difference(std::span<const double> from, std::span<const double> to) const;
    void gradient(std::span<const double> pi, std::span<double> out) const;
};

struct OptimizerOptions {
    double tol = 1e-8;              ///< projected-gradient norm for convergence
    unsigned max_restarts = 16;
    unsigned max_iterations = 20000;  ///< per restart
};

struct OptimizerReport {
    CachingPolicy policy;
    double objective_value = 0.0;
    unsigned restarts_used = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    std::vector<double> start_objectives;  ///< objective at each start point, in restart order
    std::vector<double> final_objectives;  ///< objective at each restart's end point
};

/// Norm of x - P(x - grad F(x)) for the signed objective (descent direction
/// for minimize, ascent for maximize). Zero exactly at KKT points.
double projected_gradient_norm(const LossObjective& objective, std::span<const double> pi);

/// Multi-start spectral projected gradient with nonmonotone backtracking.
/// Start points: uniform, the weights themselves, sorted greedy vertex
/// blends, then Dirichlet(1) draws. The best end point wins; ties go to the
/// lower restart index.
OptimizerReport optimize_policy(const LossObjective& objective, const OptimizerOptions& options, RngStream& stream);

/// Each of `n_sbs` caches gets M i.i.d. draws from the policy (duplicates kept).
std::vector<std::vector<std::uint32_t>> materialize_caches(const CachingPolicy& policy, std::size_t n_sbs,
                                                           std::uint32_t M, RngStream& stream);

/// |next - previous| as multisets: how many entries of `next` must be fetched.
std::size_t multiset_difference_size(std::span<const std::uint32_t> next, std::span<const std::uint32_t> previous);

}  // namespace tvc
