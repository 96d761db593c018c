#include "tvcache/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <deque>
#include <numbers>
#include <numeric>
#include <random>

#include "tvcache/error.hpp"

namespace tvc {

namespace {

double void_exponent(const SystemParams& p) { return p.lambda_g() * std::numbers::pi * p.gamma * p.gamma; }

// 1 - (1 - pi)^M without cancellation for small pi.
double presence_probability(double pi, std::uint32_t M) {
    if (pi >= 1.0) return 1.0;
    if (pi <= 0.0) return 0.0;
    return -std::expm1(static_cast<double>(M) * std::log1p(-pi));
}

}  // namespace

double g_of(double pi_i, const SystemParams& params) {
    return params.miss_cost() * std::exp(-void_exponent(params) * presence_probability(pi_i, params.M));
}

double g_derivative(double pi_i, const SystemParams& params) {
    const double q = std::clamp(1.0 - pi_i, 0.0, 1.0);
    const double dh = static_cast<double>(params.M) * std::pow(q, static_cast<double>(params.M) - 1.0);
    return -void_exponent(params) * dh * g_of(pi_i, params);
}

double closed_form_loss(const CachingPolicy& policy, const PopularityProfile& profile, const SystemParams& params) {
    if (policy.size() != profile.size()) {
        throw InvalidArgument("closed_form_loss: policy has " + std::to_string(policy.size()) +
                              " entries but profile has " + std::to_string(profile.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < policy.size(); ++i) total += g_of(policy.probs[i], params) * profile.probs[i];
    return total;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });

    double cumsum = 0.0;
    double threshold = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cumsum += v[order[k]];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (v[order[k]] - t > 0.0) threshold = t;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, v[i] - threshold);
    return out;
}

LossObjective LossObjective::from_profile(PopularityProfile profile, const SystemParams& params, Direction dir) {
    return LossObjective{std::move(profile), params, dir};
}

LossObjective LossObjective::from_weights(std::vector<double> weights, const SystemParams& params, Direction dir) {
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("objective weights must be finite and nonnegative");
    }
    return LossObjective{std::move(weights), params, dir};
}

std::span<const double> LossObjective::weights() const {
    if (const auto* p = std::get_if<PopularityProfile>(&weights_source)) return p->probs;
    return std::get<std::vector<double>>(weights_source);
}

double LossObjective::value(std::span<const double> pi) const {
    const auto w = weights();
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += g_of(pi[i], params) * w[i];
    return total;
}

double LossObjective::difference(std::span<const double> from, std::span<const double> to) const {
    const auto w = weights();
    const double c = void_exponent(params);
    const double M = static_cast<double>(params.M);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0 || from[i] == to[i]) continue;
        // h(to) - h(from) = v^M - u^M with u = 1 - to, v = 1 - from.
        const double v = 1.0 - from[i];
        const double dh = v <= 0.0 ? -std::pow(1.0 - to[i], M)
                                   : -std::pow(v, M) * std::expm1(M * std::log1p((from[i] - to[i]) / v));
        total += w[i] * g_of(from[i], params) * std::expm1(-c * dh);
    }
    return total;
}

void LossObjective::gradient(std::span<const double> pi, std::span<double> out) const {
    const auto w = weights();
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = g_derivative(pi[i], params) * w[i];
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Signed objective: always minimized internally.
struct SignedObjective {
    const LossObjective& obj;
    double sign;

    double value(std::span<const double> x) const {
        const double v = sign * obj.value(x);
        if (!std::isfinite(v)) throw NumericError("optimize_policy: objective is not finite");
        return v;
    }
    double difference(std::span<const double> from, std::span<const double> to) const {
        return sign * obj.difference(from, to);
    }
    void gradient(std::span<const double> x, std::span<double> out) const {
        obj.gradient(x, out);
        for (double& g : out) g *= sign;
    }
};

// Projection onto the simplex ignores a common shift, so gradients are
// centered on the support first; this keeps x - alpha g well scaled.
void center_on_support(std::span<const double> x, std::span<double> grad) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) {
            sum += grad[i];
            ++count;
        }
    }
    if (count == 0) return;
    const double mean = sum / static_cast<double>(count);
    for (double& v : grad) v -= mean;
}

double pg_residual(std::span<const double> x, std::span<const double> grad) {
    std::vector<double> shifted(grad.begin(), grad.end());
    center_on_support(x, shifted);
    std::vector<double> trial(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - shifted[i];
    auto p = project_to_simplex(trial);
    for (std::size_t i = 0; i < x.size(); ++i) p[i] -= x[i];
    return norm2(p);
}

struct RunResult {
    std::vector<double> x;
    double f;
    double residual;
};

// Spectral projected gradient (nonmonotone GLL line search, memory 10).
// Acceptance works on objective differences so progress stays visible below
// the rounding level of the objective itself.
RunResult spg(const SignedObjective& F, std::vector<double> x, const OptimizerOptions& opt) {
    constexpr double kAlphaMin = 1e-12;
    constexpr double kAlphaMax = 1e12;
    constexpr double kArmijo = 1e-4;
    constexpr std::size_t kMemory = 10;

    const std::size_t n = x.size();
    x = project_to_simplex(x);
    double f = F.value(x);
    std::vector<double> g(n), gc(n), gn(n), d(n), xn(n), trial(n);
    F.gradient(x, g);

    RunResult best{x, f, pg_residual(x, g)};
    double best_offset = 0.0;  // best.f - f
    double alpha = 1.0;
    {
        double ginf = 0.0;
        for (double v : g) ginf = std::max(ginf, std::abs(v));
        alpha = std::clamp(1.0 / std::max(ginf, 1e-300), kAlphaMin, kAlphaMax);
    }
    std::deque<double> history{0.0};  // past objective values minus f

    for (unsigned it = 0; it < opt.max_iterations; ++it) {
        const double residual = pg_residual(x, g);
        if (best_offset > 0.0 || (best_offset == 0.0 && residual < best.residual)) {
            best = RunResult{x, f, residual};
            best_offset = 0.0;
        }
        if (residual < opt.tol) break;

        std::copy(g.begin(), g.end(), gc.begin());
        center_on_support(x, gc);
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - alpha * gc[i];
        const auto p = project_to_simplex(trial);
        for (std::size_t i = 0; i < n; ++i) d[i] = p[i] - x[i];
        const double gd = dot(gc, d);
        if (!(gd < 0.0)) {
            if (alpha == 1.0) break;
            // alpha collapsed to a non-descent step; fall back to the unit step.
            alpha = 1.0;
            continue;
        }
        const double slack = *std::max_element(history.begin(), history.end());
        double lambda = 1.0;
        double df = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + lambda * d[i];
            df = F.difference(x, xn);
            if (!std::isfinite(df)) throw NumericError("optimize_policy: objective is not finite");
            if (df <= slack + kArmijo * lambda * gd) {
                accepted = true;
                break;
            }
            const double denom = df - lambda * gd;
            const double lt = denom > 0.0 ? -0.5 * lambda * lambda * gd / denom : 0.5 * lambda;
            lambda = (lt >= 0.1 * lambda && lt <= 0.9 * lambda) ? lt : 0.5 * lambda;
        }
        if (!accepted) break;

        F.gradient(xn, gn);
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = xn[i] - x[i];
            ss += s * s;
            sy += s * (gn[i] - g[i]);
        }
        alpha = sy > 0.0 ? std::clamp(ss / sy, kAlphaMin, kAlphaMax) : kAlphaMax;
        x.swap(xn);
        g.swap(gn);
        f += df;
        best_offset -= df;
        for (double& h : history) h -= df;
        history.push_back(0.0);
        if (history.size() > kMemory) history.pop_front();
        if (ss == 0.0) break;
    }
    const double residual = pg_residual(x, g);
    if (best_offset > 0.0 || (best_offset == 0.0 && residual < best.residual)) best = RunResult{x, f, residual};
    best.f = F.value(best.x);
    return best;
}

std::vector<std::vector<double>> start_points(std::span<const double> w, Direction dir, unsigned max_restarts,
                                              RngStream& stream) {
    const std::size_t n = w.size();
    std::vector<std::vector<double>> starts;
    starts.push_back(std::vector<double>(n, 1.0 / static_cast<double>(n)));

    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total > 0.0) {
        std::vector<double> s(w.begin(), w.end());
        for (double& v : s) v /= total;
        starts.push_back(std::move(s));
    }

    // Greedy blends: uniform mass on the k most (minimize) or least (maximize)
    // weighted files. k = 1 is a vertex.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (dir == Direction::minimize) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
    }
    for (std::size_t k = 1; k < n; k *= 2) {
        std::vector<double> s(n, 0.0);
        for (std::size_t j = 0; j < k; ++j) s[order[j]] = 1.0 / static_cast<double>(k);
        starts.push_back(std::move(s));
    }
    if (dir == Direction::maximize) {
        for (std::size_t j = 1; j < std::min<std::size_t>(n, 3); ++j) {
            std::vector<double> s(n, 0.0);
            s[order[j]] = 1.0;
            starts.push_back(std::move(s));
        }
    }

    std::exponential_distribution<double> expo(1.0);
    while (n > 1 && starts.size() < max_restarts) {
        std::vector<double> s(n);
        double sum = 0.0;
        for (double& v : s) sum += (v = expo(stream));
        for (double& v : s) v /= sum;
        starts.push_back(std::move(s));
    }
    if (starts.size() > std::max(1u, max_restarts)) starts.resize(std::max(1u, max_restarts));
    return starts;
}

}  // namespace

double projected_gradient_norm(const LossObjective& objective, std::span<const double> pi) {
    const SignedObjective F{objective, objective.direction == Direction::minimize ? 1.0 : -1.0};
    std::vector<double> g(pi.size());
    F.gradient(pi, g);
    return pg_residual(pi, g);
}

OptimizerReport optimize_policy(const LossObjective& objective, const OptimizerOptions& options, RngStream& stream) {
    if (!(options.tol > 0.0)) throw InvalidArgument("optimize_policy: tol must be positive");
    const auto w = objective.weights();
    if (w.empty()) throw InvalidArgument("optimize_policy: empty weight vector");

    const double sign = objective.direction == Direction::minimize ? 1.0 : -1.0;
    const SignedObjective F{objective, sign};

    OptimizerReport report;
    const auto starts = start_points(w, objective.direction, options.max_restarts, stream);
    double best_f = 0.0;
    for (std::size_t r = 0; r < starts.size(); ++r) {
        report.start_objectives.push_back(objective.value(project_to_simplex(starts[r])));
        auto run = spg(F, starts[r], options);
        report.final_objectives.push_back(sign * run.f);
        if (r == 0 || run.f < best_f) {
            best_f = run.f;
            report.policy = CachingPolicy{std::move(run.x)};
            report.kkt_residual = run.residual;
        }
    }
    report.restarts_used = static_cast<unsigned>(starts.size());
    report.objective_value = sign * best_f;
    report.converged = report.kkt_residual < options.tol;
    return report;
}

std::vector<std::vector<std::uint32_t>> materialize_caches(const CachingPolicy& policy, std::size_t n_sbs,
                                                           std::uint32_t M, RngStream& stream) {
    std::discrete_distribution<std::uint32_t> pick(policy.probs.begin(), policy.probs.end());
    std::vector<std::vector<std::uint32_t>> caches(n_sbs);
    for (auto& cache : caches) {
        cache.resize(M);
        for (auto& f : cache) f = pick(stream);
    }
    return caches;
}

std::size_t multiset_difference_size(std::span<const std::uint32_t> next, std::span<const std::uint32_t> previous) {
    std::vector<std::uint32_t> a(next.begin(), next.end());
    std::vector<std::uint32_t> b(previous.begin(), previous.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0, missing = 0;
    while (i < a.size()) {
        if (j == b.size() || a[i] < b[j]) {
            ++missing;
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
    return missing;
}

}  // namespace tvc
