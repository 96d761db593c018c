#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "tvcache/estimator.hpp"
#include "tvcache/model.hpp"
#include "tvcache/traffic.hpp"

namespace tvc {

/// A lower bound on the probability of the good request-count event, with
/// the unclamped formula value kept for reporting.
struct ZetaValue {
    double raw = 0.0;
    double clamped = 0.0;
};

/// psi_p for the Bernoulli request model.
double psi_bernoulli(double p, double alpha_min, double alpha_max, double a_min, double a_max);

/// 1 - 2 exp(-psi_p a_min n / (2p)). Requires 0 < p < alpha_min < alpha_max.
ZetaValue zeta_bernoulli(double a, double n, double p, double alpha_min, double alpha_max, double a_min,
                         double a_max);

/// 1 - 2 exp(-n a_min lambda_r delta_slot). `a` only enters through a_min.
ZetaValue zeta_poisson(double a, double n, double lambda_r, double delta_slot, double a_min);

struct AlphaEnvelope {
    double alpha_min = 0.0;
    double alpha_max = 0.0;
};

/// alpha_min = lambda_r * delta / e^2, alpha_max = lambda_r * delta * e.
AlphaEnvelope poisson_alphas(double lambda_r, double delta_slot);

enum class BoundModel { general, bernoulli, poisson };

struct BoundInputs {
    SystemParams params;
    BlockSchedule schedule;
    std::int64_t t = 0;
    std::int64_t T = 0;
    double delta = 0.1;
    std::function<double(double)> beta = [](double) { return 0.0; };
    ArrivalModel request_model;
    BoundModel model = BoundModel::general;
    double rademacher_even = 0.0;
    double rademacher_odd = 0.0;
    double discrepancy_even = 0.0;
    double discrepancy_odd = 0.0;
    double alpha_min = 0.0;
    double alpha_max = 1.0;
    /// Stop the Poisson-weighted j-sum once its remaining mass is below this.
    double tail_tol = 1e-12;
    /// Extra j terms beyond the automatic truncation point.
    std::uint32_t extra_terms = 0;
};

/// Throws InvalidArgument naming the first violated precondition.
void validate_bound_inputs(const BoundInputs& in);

struct DeltaPrime {
    double value = 0.0;
    double void_term = 0.0;           ///< exp(-lambda_u pi R^2)
    double mixing_term = 0.0;         ///< sum_{i=2}^{2m-1} beta(a_i)
    double request_count_term = 0.0;  ///< model-specific request-count penalty
    std::uint32_t truncation = 0;     ///< last j of the Poisson sum (general model only)
    double zeta_raw_min = 1.0;        ///< smallest unclamped zeta encountered
};

DeltaPrime delta_prime_general(const BoundInputs& in);
DeltaPrime delta_prime_bernoulli(const BoundInputs& in);
DeltaPrime delta_prime_poisson(const BoundInputs& in);
/// Dispatches on `in.model`.
DeltaPrime delta_prime(const BoundInputs& in);

struct BoundTerms {
    double rademacher_term = 0.0;    ///< 2 max(R_e, R_o)
    double discrepancy_term = 0.0;   ///< max(Delta_e, Delta_o)
    double deviation_term = 0.0;     ///< coef * sqrt(a_max log(2/delta') / t)
    double void_term = 0.0;
    double mixing_term = 0.0;
    double request_count_term = 0.0;
};

struct BoundReport {
    BoundModel model = BoundModel::general;
    double epsilon = 0.0;  ///< NaN when infeasible
    double delta_prime = 0.0;
    double deviation_coefficient = 0.0;
    BoundTerms terms;
    bool feasible = false;
    std::uint32_t truncation = 0;
    double zeta_raw_min = 1.0;
};

/// Deviation coefficient of the selected model.
double deviation_coefficient(const BoundInputs& in);

/// Full bound. An infeasible delta' yields feasible = false and NaN epsilon.
BoundReport epsilon_bound(const BoundInputs& in);

std::string to_string(BoundModel m);
BoundModel bound_model_from_string(const std::string& s);

}  // namespace tvc
