#include "tvcache/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tvcache/error.hpp"

namespace tvc {

namespace {

ZetaValue make_zeta(double raw) { return ZetaValue{raw, std::clamp(raw, 0.0, 1.0)}; }

void check_bernoulli_regime(double p, double alpha_min, double alpha_max) {
    if (!(p > 0.0 && p < alpha_min && alpha_min < alpha_max)) {
        throw InvalidArgument("Bernoulli bound requires 0 < p < alpha_min < alpha_max (got p = " + std::to_string(p) +
                              ", alpha_min = " + std::to_string(alpha_min) +
                              ", alpha_max = " + std::to_string(alpha_max) + ")");
    }
}

double void_mass(const SystemParams& params) { return std::exp(-params.mean_users()); }

double mixing_mass(const BoundInputs& in) {
    const auto& a = in.schedule.lengths;
    double sum = 0.0;
    // Interior blocks only: i = 2 .. 2m-1.
    for (std::size_t i = 1; i + 1 < a.size(); ++i) sum += in.beta(static_cast<double>(a[i]));
    return sum;
}

double two_m(const BoundInputs& in) { return static_cast<double>(in.schedule.lengths.size()); }

/// 4m e^{-L} (e^{-L e^{-phi}} - 1), evaluated with expm1.
double bracket_term(double L, double phi, double m) {
    return 4.0 * m * std::exp(-L) * std::expm1(-L * std::exp(-phi));
}

}  // namespace

double psi_bernoulli(double p, double alpha_min, double alpha_max, double a_min, double a_max) {
    const double upper = a_min * (p - alpha_max) * (p - alpha_max) / (1.0 + a_max * (alpha_min - p) / 3.0);
    const double lower = (p - alpha_min) * (p - alpha_min);
    return std::min(upper, lower);
}

ZetaValue zeta_bernoulli(double /*a*/, double n, double p, double alpha_min, double alpha_max, double a_min,
                         double a_max) {
    check_bernoulli_regime(p, alpha_min, alpha_max);
    if (!(a_min >= 1.0 && a_max >= a_min)) throw InvalidArgument("zeta_bernoulli: need 1 <= a_min <= a_max");
    if (!(n >= 0.0)) throw InvalidArgument("zeta_bernoulli: n must be nonnegative");
    const double psi = psi_bernoulli(p, alpha_min, alpha_max, a_min, a_max);
    return make_zeta(1.0 - 2.0 * std::exp(-psi * a_min * n / (2.0 * p)));
}

ZetaValue zeta_poisson(double /*a*/, double n, double lambda_r, double delta_slot, double a_min) {
    if (!(lambda_r > 0.0 && delta_slot > 0.0)) throw InvalidArgument("zeta_poisson: lambda_r and delta must be positive");
    return make_zeta(1.0 - 2.0 * std::exp(-n * a_min * lambda_r * delta_slot));
}

AlphaEnvelope poisson_alphas(double lambda_r, double delta_slot) {
    const double rate = lambda_r * delta_slot;
    return AlphaEnvelope{rate / (std::numbers::e * std::numbers::e), rate * std::numbers::e};
}

void validate_bound_inputs(const BoundInputs& in) {
    validate_params(in.params);
    if (!(in.delta > 0.0 && in.delta < 1.0)) throw InvalidArgument("bounds: delta must lie in (0, 1)");
    if (in.t < 2) throw InvalidArgument("bounds: t must be ≥ 2");
    if (in.T < 0) throw InvalidArgument("bounds: T must be ≥ 0");
    if (in.schedule.lengths.empty() || in.schedule.lengths.size() % 2 != 0) {
        throw InvalidArgument("bounds: schedule must have an even, nonzero number of blocks");
    }
    if (in.schedule.total() != in.t) throw InvalidArgument("bounds: schedule does not cover exactly t slots");
    if (in.schedule.a_min() < 1) throw InvalidArgument("bounds: every block needs at least one slot");
    if (!in.beta) throw InvalidArgument("bounds: beta function is empty");
    if (in.model != BoundModel::poisson) {
        if (!(in.alpha_min > 0.0 && in.alpha_min <= in.alpha_max && in.alpha_max <= 1.0)) {
            throw InvalidArgument("bounds: need 0 < alpha_min <= alpha_max <= 1");
        }
    }
    if (in.model == BoundModel::bernoulli) {
        if (in.request_model.kind != ArrivalKind::bernoulli) throw InvalidArgument("bounds: Bernoulli model needs Bernoulli arrivals");
        check_bernoulli_regime(in.request_model.p, in.alpha_min, in.alpha_max);
    }
    if (in.model == BoundModel::poisson && in.request_model.kind != ArrivalKind::poisson) {
        throw InvalidArgument("bounds: Poisson model needs Poisson arrivals");
    }
    if (!(in.tail_tol > 0.0)) throw InvalidArgument("bounds: tail_tol must be positive");
}

DeltaPrime delta_prime_general(const BoundInputs& in) {
    validate_bound_inputs(in);
    DeltaPrime out;
    const double L = in.params.mean_users();
    const double a_min = static_cast<double>(in.schedule.a_min());
    const double a_max = static_cast<double>(in.schedule.a_max());
    const double blocks = two_m(in);

    auto zeta = [&](double a, double n) {
        if (in.request_model.kind == ArrivalKind::bernoulli) {
            return zeta_bernoulli(a, n, in.request_model.p, in.alpha_min, in.alpha_max, a_min, a_max);
        }
        return zeta_poisson(a, n, in.request_model.lambda_r, in.params.delta_slot, a_min);
    };

    // sum_{j>=1} Poisson(L) pmf(j) * sum_i (1 - zeta_{a_i,j}), stopped once
    // the remaining pmf mass times 2m is below tail_tol.
    double log_pmf = -L;  // j = 0
    double mass = 0.0;
    std::uint32_t j = 0;
    std::uint32_t extra_left = in.extra_terms;
    const double log_L = std::log(L);
    for (;;) {
        ++j;
        log_pmf += log_L - std::log(static_cast<double>(j));
        const double pmf = std::exp(log_pmf);
        double miss = 0.0;
        for (auto a : in.schedule.lengths) {
            const auto z = zeta(static_cast<double>(a), static_cast<double>(j));
            out.zeta_raw_min = std::min(out.zeta_raw_min, z.raw);
            miss += 1.0 - z.clamped;
        }
        mass += pmf * miss;
        const double jn = static_cast<double>(j);
        if (jn + 2.0 > L) {
            // Tail beyond j is at most pmf(j+1) / (1 - L/(j+2)).
            const double tail = pmf * L / (jn + 1.0) / (1.0 - L / (jn + 2.0));
            if (tail * blocks < in.tail_tol) {
                if (extra_left == 0) break;
                --extra_left;
            }
        }
        if (j > 100000000u) throw NumericError("delta_prime_general: Poisson sum failed to converge");
    }
    out.truncation = j;
    out.void_term = void_mass(in.params);
    out.mixing_term = mixing_mass(in);
    out.request_count_term = mass;
    out.value = in.delta / 2.0 - out.void_term - out.mixing_term - out.request_count_term;
    return out;
}

DeltaPrime delta_prime_bernoulli(const BoundInputs& in) {
    validate_bound_inputs(in);
    if (in.request_model.kind != ArrivalKind::bernoulli) throw InvalidArgument("bounds: Bernoulli model needs Bernoulli arrivals");
    check_bernoulli_regime(in.request_model.p, in.alpha_min, in.alpha_max);
    const double p = in.request_model.p;
    const double a_min = static_cast<double>(in.schedule.a_min());
    const double a_max = static_cast<double>(in.schedule.a_max());
    const double phi = a_min * psi_bernoulli(p, in.alpha_min, in.alpha_max, a_min, a_max) / (2.0 * p);

    DeltaPrime out;
    out.void_term = void_mass(in.params);
    out.mixing_term = mixing_mass(in);
    out.request_count_term = bracket_term(in.params.mean_users(), phi, static_cast<double>(in.schedule.m));
    out.value = in.delta / 2.0 - (out.void_term + out.mixing_term + out.request_count_term);
    return out;
}

DeltaPrime delta_prime_poisson(const BoundInputs& in) {
    validate_bound_inputs(in);
    if (in.request_model.kind != ArrivalKind::poisson) throw InvalidArgument("bounds: Poisson model needs Poisson arrivals");
    const double a_min = static_cast<double>(in.schedule.a_min());
    const double exponent = a_min * in.request_model.lambda_r * in.params.delta_slot;

    DeltaPrime out;
    out.void_term = void_mass(in.params);
    out.mixing_term = mixing_mass(in);
    out.request_count_term = bracket_term(in.params.mean_users(), exponent, static_cast<double>(in.schedule.m));
    out.value = in.delta / 2.0 - (out.void_term + out.mixing_term + out.request_count_term);
    return out;
}

DeltaPrime delta_prime(const BoundInputs& in) {
    switch (in.model) {
        case BoundModel::bernoulli: return delta_prime_bernoulli(in);
        case BoundModel::poisson: return delta_prime_poisson(in);
        case BoundModel::general: break;
    }
    return delta_prime_general(in);
}

double deviation_coefficient(const BoundInputs& in) {
    const double n = static_cast<double>(in.params.N);
    const double a_min = static_cast<double>(in.schedule.a_min());
    const double a_max = static_cast<double>(in.schedule.a_max());
    if (in.model == BoundModel::poisson) {
        return n * in.params.B * a_max * std::numbers::e / (a_min * in.params.R0);
    }
    return n * in.alpha_max * in.params.B * a_max / (in.params.R0 * a_min * in.alpha_min);
}

BoundReport epsilon_bound(const BoundInputs& in) {
    const auto dp = delta_prime(in);
    BoundReport rep;
    rep.model = in.model;
    rep.delta_prime = dp.value;
    rep.truncation = dp.truncation;
    rep.zeta_raw_min = dp.zeta_raw_min;
    rep.deviation_coefficient = deviation_coefficient(in);
    rep.terms.void_term = dp.void_term;
    rep.terms.mixing_term = dp.mixing_term;
    rep.terms.request_count_term = dp.request_count_term;
    rep.terms.rademacher_term = 2.0 * std::max(in.rademacher_even, in.rademacher_odd);
    rep.terms.discrepancy_term = std::max(in.discrepancy_even, in.discrepancy_odd);
    rep.feasible = dp.value > 0.0;
    if (!rep.feasible) {
        rep.terms.deviation_term = std::numeric_limits<double>::quiet_NaN();
        rep.epsilon = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const double a_max = static_cast<double>(in.schedule.a_max());
    rep.terms.deviation_term =
        rep.deviation_coefficient * std::sqrt(a_max * std::log(2.0 / dp.value) / static_cast<double>(in.t));
    rep.epsilon = rep.terms.rademacher_term + rep.terms.discrepancy_term + rep.terms.deviation_term;
    return rep;
}

std::string to_string(BoundModel m) {
    switch (m) {
        case BoundModel::bernoulli: return "bernoulli";
        case BoundModel::poisson: return "poisson";
        case BoundModel::general: break;
    }
    return "general";
}

BoundModel bound_model_from_string(const std::string& s) {
    if (s == "general") return BoundModel::general;
    if (s == "bernoulli") return BoundModel::bernoulli;
    if (s == "poisson") return BoundModel::poisson;
    throw InvalidArgument("unknown bound model '" + s + "' (expected general, bernoulli or poisson)");
}

}  // namespace tvc
