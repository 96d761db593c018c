#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tvcache/model.hpp"
#include "tvcache/rng.hpp"

namespace tvc {

enum class DynamicsMode {
    static_profile,           ///< constant base profile
    deterministic_permutation,  ///< swap pairs at every multiple of `period`
    random_permutation,       ///< swap pairs at renewal epochs, Exp(mean = period) gaps
    explicit_sequence,        ///< caller-supplied per-slot profiles
};

/// How the popularity profile evolves from slot to slot.
struct PopularityDynamics {
    PopularityProfile base;
    DynamicsMode mode = DynamicsMode::static_profile;
    double period = 150.0;
    std::uint32_t pairs_per_change = 3;
    /// Used only in explicit_sequence mode; slot s uses sequence[min(s, size-1)].
    std::vector<PopularityProfile> sequence;
};

void validate_dynamics(const PopularityDynamics& dyn);

/// One profile per slot 0..horizon-1. Every profile is a permutation of the
/// base (in the permutation modes).
std::vector<PopularityProfile> evolve_popularity(const PopularityDynamics& dyn, std::int64_t horizon, RngStream& stream);

enum class ArrivalKind { bernoulli, poisson };

struct ArrivalModel {
    ArrivalKind kind = ArrivalKind::poisson;
    double p = 0.1;          ///< per-user per-slot request probability (Bernoulli)
    double lambda_r = 0.09;  ///< requests per user per second (Poisson)

    static ArrivalModel bernoulli(double p) { return ArrivalModel{ArrivalKind::bernoulli, p, 0.0}; }
    static ArrivalModel poisson(double lambda_r) { return ArrivalModel{ArrivalKind::poisson, 0.0, lambda_r}; }
};

void validate_arrivals(const ArrivalModel& a);

/// Requests of `n_users` independent users over slots 0..horizon-1. Each
/// user's stream is split from `stream` by user id, so the result does not
/// depend on `threads`. Requests inside a slot are ordered by arrival time
/// (ties by user id). Slots without requests are omitted.
RequestTrace generate_trace(const std::vector<PopularityProfile>& profiles, const ArrivalModel& arrivals,
                            std::uint32_t n_users, const SystemParams& params, std::int64_t horizon,
                            RngStream& stream, unsigned threads = 1);

/// beta(s) <= min(1, C * rho^s); C = 0 encodes an independent process.
struct GeometricBeta {
    double C = 1.0;
    double rho = 0.0;

    double operator()(double s) const;
};

/// Mixing bound of the implemented popularity chain. Permutation modes use
/// the per-slot change probability q: rho = 1 - q, C = 1. Static mode with
/// conditionally i.i.d. requests gives beta = 0. Throws InvalidArgument for
/// explicit sequences, whose mixing is unknown.
GeometricBeta analytic_beta(const PopularityDynamics& dyn);

/// Probability that at least one profile change lands in a given slot.
double change_probability_per_slot(const PopularityDynamics& dyn);

std::string to_string(DynamicsMode m);
std::string to_string(ArrivalKind k);

}  // namespace tvc
