#include "tvcache/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tvcache/error.hpp"
#include "tvcache/parallel.hpp"

namespace tvc {

void validate_dynamics(const PopularityDynamics& dyn) {
    if (dyn.mode == DynamicsMode::explicit_sequence) {
        if (dyn.sequence.empty()) throw InvalidArgument("dynamics: explicit sequence is empty");
        for (const auto& p : dyn.sequence) {
            if (!is_probability_vector(p.probs)) throw InvalidArgument("dynamics: sequence entry is not a valid profile");
        }
        return;
    }
    if (!is_probability_vector(dyn.base.probs)) throw InvalidArgument("dynamics: base is not a valid profile");
    if (!(dyn.period >= 1.0)) throw InvalidArgument("dynamics: period must be ≥ 1");
    if (dyn.pairs_per_change < 1) throw InvalidArgument("dynamics: pairs_per_change must be ≥ 1");
    if (dyn.mode == DynamicsMode::deterministic_permutation && dyn.period != std::floor(dyn.period)) {
        throw InvalidArgument("dynamics: deterministic period must be a whole number of slots");
    }
}

namespace {

void swap_random_pairs(std::vector<double>& probs, std::uint32_t pairs, RngStream& rng) {
    const std::size_t n = probs.size();
    const std::size_t k = std::min<std::size_t>(2 * static_cast<std::size_t>(pairs), n - n % 2);
    if (k < 2) return;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k entries are a uniform draw of distinct files.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
        std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i + 1 < k; i += 2) std::swap(probs[idx[i]], probs[idx[i + 1]]);
}

}  // namespace

std::vector<PopularityProfile> evolve_popularity(const PopularityDynamics& dyn, std::int64_t horizon,
                                                 RngStream& stream) {
    if (horizon < 1) throw InvalidArgument("evolve_popularity: horizon must be ≥ 1");
    validate_dynamics(dyn);

    std::vector<PopularityProfile> out;
    out.reserve(static_cast<std::size_t>(horizon));

    if (dyn.mode == DynamicsMode::explicit_sequence) {
        for (std::int64_t s = 0; s < horizon; ++s) {
            const auto k = std::min<std::size_t>(static_cast<std::size_t>(s), dyn.sequence.size() - 1);
            out.push_back(PopularityProfile{dyn.sequence[k].probs, s});
        }
        return out;
    }

    std::vector<double> current = dyn.base.probs;
    auto swap_rng = stream.split("swaps");
    auto epoch_rng = stream.split("epochs");
    std::exponential_distribution<double> gap(1.0 / dyn.period);
    double next_epoch = dyn.mode == DynamicsMode::random_permutation ? gap(epoch_rng) : 0.0;

    for (std::int64_t s = 0; s < horizon; ++s) {
        switch (dyn.mode) {
            case DynamicsMode::deterministic_permutation:
                if (s > 0 && s % static_cast<std::int64_t>(dyn.period) == 0) {
                    swap_random_pairs(current, dyn.pairs_per_change, swap_rng);
                }
                break;
            case DynamicsMode::random_permutation:
                // A change at continuous time e is visible from slot ceil(e) on.
                while (next_epoch <= static_cast<double>(s)) {
                    swap_random_pairs(current, dyn.pairs_per_change, swap_rng);
                    next_epoch += gap(epoch_rng);
                }
                break;
            default:
                break;
        }
        out.push_back(PopularityProfile{current, s});
    }
    return out;
}

void validate_arrivals(const ArrivalModel& a) {
    if (a.kind == ArrivalKind::bernoulli) {
        if (!(a.p > 0.0 && a.p < 1.0)) throw InvalidArgument("arrivals: Bernoulli p must lie in (0, 1)");
    } else if (!(a.lambda_r > 0.0) || !std::isfinite(a.lambda_r)) {
        throw InvalidArgument("arrivals: Poisson lambda_r must be positive");
    }
}

RequestTrace generate_trace(const std::vector<PopularityProfile>& profiles, const ArrivalModel& arrivals,
                            std::uint32_t n_users, const SystemParams& params, std::int64_t horizon,
                            RngStream& stream, unsigned threads) {
    validate_arrivals(arrivals);
    if (horizon < 0 || static_cast<std::size_t>(horizon) > profiles.size()) {
        throw InvalidArgument("generate_trace: need one profile per slot of the horizon");
    }
    RequestTrace trace;
    trace.n_files = horizon > 0 ? static_cast<std::uint32_t>(profiles.front().size()) : 0;
    if (n_users == 0 || horizon == 0) return trace;

    using Dist = std::discrete_distribution<std::uint32_t>;
    std::vector<Dist::param_type> file_params;
    std::vector<std::size_t> param_of_slot(static_cast<std::size_t>(horizon));
    for (std::int64_t s = 0; s < horizon; ++s) {
        const auto& probs = profiles[static_cast<std::size_t>(s)].probs;
        if (probs.size() != trace.n_files) throw InvalidArgument("generate_trace: profiles differ in length");
        if (s == 0 || probs != profiles[static_cast<std::size_t>(s - 1)].probs) {
            file_params.emplace_back(probs.begin(), probs.end());
        }
        param_of_slot[static_cast<std::size_t>(s)] = file_params.size() - 1;
    }

    const double dt = params.delta_slot;
    struct Event {
        std::int64_t slot;
        Request req;
    };
    std::vector<std::vector<Event>> per_user(n_users);

    parallel_for(n_users, threads, [&](std::size_t u) {
        auto rng = stream.split(static_cast<std::uint64_t>(u));
        Dist pick;
        std::poisson_distribution<std::uint32_t> count(arrivals.lambda_r * dt);
        std::vector<double> offsets;
        auto& events = per_user[u];
        for (std::int64_t s = 0; s < horizon; ++s) {
            std::uint32_t k = 0;
            if (arrivals.kind == ArrivalKind::bernoulli) {
                k = rng.uniform() < arrivals.p ? 1 : 0;
            } else {
                k = count(rng);
            }
            if (k == 0) continue;
            offsets.resize(k);
            for (auto& o : offsets) o = rng.uniform();
            std::sort(offsets.begin(), offsets.end());
            const double lo = static_cast<double>(s) * dt;
            const double hi = static_cast<double>(s + 1) * dt;
            for (double o : offsets) {
                double t = lo + o * dt;
                if (t >= hi) t = std::nextafter(hi, lo);
                const auto file = pick(rng, file_params[param_of_slot[static_cast<std::size_t>(s)]]);
                events.push_back(Event{s, Request{t, static_cast<std::uint32_t>(u), file}});
            }
        }
    });

    std::vector<std::vector<Request>> by_slot(static_cast<std::size_t>(horizon));
    for (const auto& events : per_user) {
        for (const auto& e : events) by_slot[static_cast<std::size_t>(e.slot)].push_back(e.req);
    }
    for (std::int64_t s = 0; s < horizon; ++s) {
        auto& reqs = by_slot[static_cast<std::size_t>(s)];
        if (reqs.empty()) continue;
        std::sort(reqs.begin(), reqs.end(), [](const Request& a, const Request& b) {
            return a.time != b.time ? a.time < b.time : a.user < b.user;
        });
        trace.slots.push_back(SlotRecord{s, std::move(reqs)});
    }
    return trace;
}

double GeometricBeta::operator()(double s) const {
    if (C == 0.0) return 0.0;
    return std::min(1.0, C * std::pow(rho, s));
}

double change_probability_per_slot(const PopularityDynamics& dyn) {
    switch (dyn.mode) {
        case DynamicsMode::deterministic_permutation: return 1.0 / dyn.period;
        case DynamicsMode::random_permutation: return -std::expm1(-1.0 / dyn.period);
        default: return 0.0;
    }
}

GeometricBeta analytic_beta(const PopularityDynamics& dyn) {
    switch (dyn.mode) {
        case DynamicsMode::static_profile: return GeometricBeta{0.0, 0.0};
        case DynamicsMode::deterministic_permutation:
        case DynamicsMode::random_permutation:
            return GeometricBeta{1.0, 1.0 - change_probability_per_slot(dyn)};
        case DynamicsMode::explicit_sequence: break;
    }
    throw InvalidArgument("analytic_beta: mixing of an explicit profile sequence is unknown; "
                          "supply beta explicitly (C, rho)");
}

std::string to_string(DynamicsMode m) {
    switch (m) {
        case DynamicsMode::deterministic_permutation: return "deterministic-permutation";
        case DynamicsMode::random_permutation: return "random-permutation";
        case DynamicsMode::explicit_sequence: return "explicit";
        case DynamicsMode::static_profile: break;
    }
    return "static";
}

std::string to_string(ArrivalKind k) { return k == ArrivalKind::bernoulli ? "bernoulli" : "poisson"; }

}  // namespace tvc
