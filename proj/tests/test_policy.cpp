#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "tvcache/error.hpp"
#include "tvcache/policy.hpp"

namespace tvc {
namespace {

/// Params with lambda_g * pi * gamma^2 equal to `exponent`.
SystemParams with_exponent(double exponent, std::uint32_t M, std::uint32_t N = 10) {
    SystemParams p;
    p.gamma = 500.0;
    p.lambda_s = exponent / (std::numbers::pi * p.gamma * p.gamma);
    p.M = M;
    p.N = N;
    return p;
}

std::vector<double> random_simplex(std::size_t n, RngStream& rng) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += (x = -std::log(1.0 - rng.uniform()));
    for (auto& x : v) x /= s;
    return v;
}

TEST(G, BoundaryValues) {
    const auto p = with_exponent(3.0, 4);
    EXPECT_DOUBLE_EQ(g_of(0.0, p), p.B / p.R0);
    EXPECT_NEAR(g_of(1.0, p), std::exp(-3.0), 1e-15);
    EXPECT_NEAR(g_of(0.5, with_exponent(2.0, 1)), std::exp(-1.0), 1e-15);
    auto scaled = p;
    scaled.B = 8.0;
    scaled.R0 = 2.0;
    EXPECT_NEAR(g_of(0.3, scaled), 4.0 * g_of(0.3, p), 1e-14);
}

TEST(G, StrictlyDecreasingAndConvex) {
    for (std::uint32_t M : {1u, 2u, 5u, 10u}) {
        const auto p = with_exponent(7.85, M);
        double prev = g_of(0.0, p);
        for (int k = 1; k < 1000; ++k) {
            const double x = k / 1000.0;
            const double v = g_of(x, p);
            // Strict until (1 - x)^M drops below double resolution of the exponent.
            if (std::pow(1.0 - x, M) > 1e-12) {
                EXPECT_LT(v, prev);
            } else {
                EXPECT_LE(v, prev);
            }
            // Second difference is nonnegative: g is convex on [0, 1].
            const double h = 1e-3;
            EXPECT_GE(g_of(x - h, p) + g_of(std::min(1.0, x + h), p) - 2.0 * v, -1e-15) << "x=" << x;
            prev = v;
        }
    }
}

/// Complex-step derivative of an independent g: Im g(x + ih) / h has no
/// subtractive cancellation, so it is accurate to machine precision.
double complex_step_dg(double x, const SystemParams& p) {
    const double c = p.lambda_g() * std::numbers::pi * p.gamma * p.gamma;
    const double h = 1e-30;
    const std::complex<double> z(x, h);
    const auto g = (p.B / p.R0) * std::exp(-c * (1.0 - std::pow(1.0 - z, static_cast<double>(p.M))));
    return g.imag() / h;
}

TEST(G, DerivativeMatchesComplexStep) {
    RngStream rng(RngSeed{99});
    for (int i = 0; i < 100; ++i) {
        const auto p = with_exponent(0.5 + 19.5 * rng.uniform(), 1 + static_cast<std::uint32_t>(rng() % 10));
        const double x = 0.01 + 0.98 * rng.uniform();
        const double an = g_derivative(x, p);
        EXPECT_NEAR(an, complex_step_dg(x, p), 1e-6 * std::abs(an)) << "x=" << x;
    }
}

TEST(G, DerivativeMatchesCentralDifferences) {
    RngStream rng(RngSeed{98});
    for (int i = 0; i < 100; ++i) {
        const auto p = with_exponent(0.5 + 9.5 * rng.uniform(), 1 + static_cast<std::uint32_t>(rng() % 5));
        const double x = 0.05 + 0.6 * rng.uniform();
        const double h = 1e-5;
        const double fd = (g_of(x + h, p) - g_of(x - h, p)) / (2.0 * h);
        const double an = g_derivative(x, p);
        EXPECT_NEAR(an, fd, 1e-6 * std::abs(an)) << "x=" << x;
    }
}

TEST(ObjectiveGradient, MatchesComplexStep) {
    RngStream rng(RngSeed{100});
    const auto p = with_exponent(7.85, 10, 20);
    const auto prof = random_simplex(20, rng);
    const auto obj = LossObjective::from_profile(PopularityProfile{prof}, p);
    std::vector<double> grad(20);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_simplex(20, rng);
        obj.gradient(x, grad);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double ref = prof[i] * complex_step_dg(x[i], p);
            EXPECT_NEAR(grad[i], ref, 1e-6 * std::abs(ref));
        }
    }
}

TEST(ClosedForm, UniformAndPointMass) {
    const auto p = with_exponent(4.0, 3, 8);
    const auto uni = CachingPolicy::uniform(8);
    const PopularityProfile prof{std::vector<double>(8, 0.125)};
    EXPECT_NEAR(closed_form_loss(uni, prof, p), std::exp(-4.0 * (1.0 - std::pow(1.0 - 0.125, 3))), 1e-14);
    std::vector<double> point(8, 0.0);
    point[5] = 1.0;
    CachingPolicy pol{{0.05, 0.05, 0.1, 0.1, 0.2, 0.3, 0.1, 0.1}};
    EXPECT_DOUBLE_EQ(closed_form_loss(pol, PopularityProfile{point}, p), g_of(0.3, p));
    EXPECT_THROW(closed_form_loss(CachingPolicy::uniform(3), prof, p), InvalidArgument);
}

TEST(ClosedForm, LinearInProfile) {
    RngStream rng(RngSeed{3});
    const auto p = with_exponent(6.0, 4, 30);
    for (int trial = 0; trial < 50; ++trial) {
        CachingPolicy pol{random_simplex(30, rng)};
        PopularityProfile a{random_simplex(30, rng)}, b{random_simplex(30, rng)}, mix;
        const double w = rng.uniform();
        mix.probs.resize(30);
        for (std::size_t i = 0; i < 30; ++i) mix.probs[i] = w * a.probs[i] + (1 - w) * b.probs[i];
        const double lhs = closed_form_loss(pol, mix, p);
        const double rhs = w * closed_form_loss(pol, a, p) + (1 - w) * closed_form_loss(pol, b, p);
        EXPECT_NEAR(lhs, rhs, 1e-14);
    }
}

TEST(Projection, LandsOnSimplexAndIsOptimal) {
    RngStream rng(RngSeed{5});
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> v(n);
        for (auto& x : v) x = 4.0 * (rng.uniform() - 0.5);
        const auto q = project_to_simplex(v);
        EXPECT_TRUE(is_probability_vector(q, 1e-12));
        // Variational inequality <v - q, y - q> <= 0 for y on the simplex.
        for (int k = 0; k < 10; ++k) {
            const auto y = random_simplex(n, rng);
            double ip = 0.0;
            for (std::size_t i = 0; i < n; ++i) ip += (v[i] - q[i]) * (y[i] - q[i]);
            EXPECT_LE(ip, 1e-12);
        }
        const auto again = project_to_simplex(q);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(again[i], q[i], 1e-15);
    }
    EXPECT_EQ(project_to_simplex(std::vector<double>{5.0, -3.0}), (std::vector<double>{1.0, 0.0}));
}

TEST(Optimizer, SingleFile) {
    RngStream rng(RngSeed{1});
    const auto p = with_exponent(3.0, 2, 1);
    const auto r = optimize_policy(LossObjective::from_profile(PopularityProfile{{1.0}}, p), {}, rng);
    EXPECT_EQ(r.policy.probs, std::vector<double>{1.0});
    EXPECT_DOUBLE_EQ(r.objective_value, g_of(1.0, p));
}

TEST(Optimizer, TwoFilesAgainstGrid) {
    RngStream rng(RngSeed{2});
    const auto p = with_exponent(5.0, 1, 2);
    const PopularityProfile prof{{0.9, 0.1}};
    const auto r = optimize_policy(LossObjective::from_profile(prof, p), {}, rng);
    double best = 1e300;
    for (int k = 0; k <= 1000; ++k) {
        const double x = k / 1000.0;
        best = std::min(best, g_of(x, p) * 0.9 + g_of(1.0 - x, p) * 0.1);
    }
    EXPECT_LE(r.objective_value, best + 1e-12);
    EXPECT_NEAR(r.objective_value, best, 1e-4);
}

TEST(Optimizer, UniformProfileIsStationaryAtUniform) {
    const auto p = with_exponent(7.85, 10, 50);
    const auto obj = LossObjective::from_profile(PopularityProfile{std::vector<double>(50, 0.02)}, p);
    EXPECT_LT(projected_gradient_norm(obj, CachingPolicy::uniform(50).probs), 1e-12);
}

TEST(Optimizer, NeverWorseThanAnyStart) {
    RngStream rng(RngSeed{8});
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = with_exponent(1.0 + 15.0 * rng.uniform(), 1 + static_cast<std::uint32_t>(rng() % 8), 25);
        const auto obj = LossObjective::from_profile(PopularityProfile{random_simplex(25, rng)}, p);
        const auto r = optimize_policy(obj, OptimizerOptions{1e-8, 8, 2000}, rng);
        ASSERT_FALSE(r.start_objectives.empty());
        for (double s : r.start_objectives) EXPECT_LE(r.objective_value, s + 1e-15);
        EXPECT_TRUE(is_probability_vector(r.policy.probs, 1e-9));
        EXPECT_GE(r.kkt_residual, 0.0);
    }
}

TEST(Optimizer, ScalingProfileKeepsArgmin) {
    RngStream rng(RngSeed{12});
    const auto p = with_exponent(7.85, 10, 40);
    const auto w = random_simplex(40, rng);
    auto scaled = w;
    for (auto& x : scaled) x *= 3.5;
    RngStream r1(RngSeed{4}), r2(RngSeed{4});
    const auto a = optimize_policy(LossObjective::from_weights(w, p, Direction::minimize), {}, r1);
    const auto b = optimize_policy(LossObjective::from_weights(scaled, p, Direction::minimize), {}, r2);
    EXPECT_NEAR(b.objective_value, 3.5 * a.objective_value, 1e-9);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(a.policy.probs[i], b.policy.probs[i], 1e-6);
}

/// Independent KKT solution of min sum g(pi_i) p_i on the simplex. With g
/// convex, pi_i(nu) solves p_i g'(pi) = -nu (or is 0), and sum pi_i(nu) is
/// nonincreasing in nu; bisection on nu gives the optimum.
std::vector<double> water_filling(const std::vector<double>& prob, double c, std::uint32_t M) {
    auto dg = [&](double x) {
        const double u = std::pow(1.0 - x, M);
        return -c * M * std::pow(1.0 - x, M - 1.0) * std::exp(-c * (1.0 - u));
    };
    auto pi_of = [&](double nu) {
        std::vector<double> out(prob.size(), 0.0);
        for (std::size_t i = 0; i < prob.size(); ++i) {
            if (prob[i] * dg(0.0) >= -nu) continue;
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (prob[i] * dg(mid) < -nu ? lo : hi) = mid;
            }
            out[i] = 0.5 * (lo + hi);
        }
        return out;
    };
    double lo = 0.0, hi = c * M * (*std::max_element(prob.begin(), prob.end()));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto x = pi_of(mid);
        (std::accumulate(x.begin(), x.end(), 0.0) > 1.0 ? lo : hi) = mid;
    }
    return pi_of(0.5 * (lo + hi));
}

TEST(Optimizer, MatchesWaterFillingAtN100) {
    for (std::uint32_t M : {1u, 5u, 10u}) {
        const double c = 7.853981633974483;  // 1e-5 * pi * 500^2
        const auto p = with_exponent(c, M, 100);
        const auto prof = zipf_profile(100, 0.8);
        const auto oracle = water_filling(prof.probs, c, M);
        RngStream rng(RngSeed{M});
        const auto r = optimize_policy(LossObjective::from_profile(prof, p), OptimizerOptions{1e-8, 8, 20000}, rng);
        const double oracle_value = closed_form_loss(CachingPolicy{oracle}, prof, p);
        EXPECT_NEAR(r.objective_value, oracle_value, 1e-9) << "M=" << M;
        for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(r.policy.probs[i], oracle[i], 1e-5) << "M=" << M << " i=" << i;
        EXPECT_TRUE(r.converged) << "M=" << M << " residual " << r.kkt_residual;
    }
}

// g is convex, so the maximum over the simplex sits at the vertex on the
// least-weighted file: c * W - (c - g(1)) * min_i w_i.
TEST(Optimizer, MaximizeFindsLightestVertex) {
    RngStream rng(RngSeed{21});
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        const auto p = with_exponent(0.5 + 10.0 * rng.uniform(), 1 + static_cast<std::uint32_t>(rng() % 6),
                                     static_cast<std::uint32_t>(n));
        std::vector<double> w(n);
        for (auto& x : w) x = rng.uniform() * 5.0;
        const double W = std::accumulate(w.begin(), w.end(), 0.0);
        const double wmin = *std::min_element(w.begin(), w.end());
        const double expected = g_of(0.0, p) * W - (g_of(0.0, p) - g_of(1.0, p)) * wmin;
        const auto r = optimize_policy(LossObjective::from_weights(w, p, Direction::maximize), {1e-8, 8, 2000}, rng);
        EXPECT_NEAR(r.objective_value, expected, 1e-10 * expected);
    }
}

TEST(Optimizer, RejectsBadOptions) {
    RngStream rng(RngSeed{1});
    const auto p = with_exponent(3.0, 2, 2);
    EXPECT_THROW(optimize_policy(LossObjective::from_profile(PopularityProfile{{0.5, 0.5}}, p), {0.0, 4, 10}, rng),
                 InvalidArgument);
}

TEST(Optimizer, DeterministicForSameStream) {
    const auto p = with_exponent(7.85, 10, 60);
    const auto obj = LossObjective::from_profile(zipf_profile(60, 1.1), p);
    RngStream a(RngSeed{77}), b(RngSeed{77});
    EXPECT_EQ(optimize_policy(obj, {}, a).policy, optimize_policy(obj, {}, b).policy);
}

TEST(Caches, PointMass) {
    RngStream rng(RngSeed{1});
    CachingPolicy pol{{0.0, 0.0, 1.0, 0.0}};
    for (const auto& c : materialize_caches(pol, 25, 4, rng)) EXPECT_EQ(c, (std::vector<std::uint32_t>{2, 2, 2, 2}));
}

TEST(Caches, PresenceProbability) {
    RngStream rng(RngSeed{2});
    const auto caches = materialize_caches(CachingPolicy::uniform(2), 10000, 2, rng);
    std::size_t with_first = 0;
    for (const auto& c : caches) with_first += std::count(c.begin(), c.end(), 0u) > 0;
    EXPECT_NEAR(with_first / 10000.0, 0.75, 0.02);
    EXPECT_TRUE(materialize_caches(CachingPolicy::uniform(2), 0, 2, rng).empty());
}

TEST(Caches, MultisetDifference) {
    using V = std::vector<std::uint32_t>;
    EXPECT_EQ(multiset_difference_size(V{1, 2, 3}, V{1, 2, 3}), 0u);
    EXPECT_EQ(multiset_difference_size(V{3, 2, 1}, V{1, 2, 3}), 0u);
    EXPECT_EQ(multiset_difference_size(V{1, 1, 2}, V{1, 2, 2}), 1u);
    EXPECT_EQ(multiset_difference_size(V{4, 4, 4}, V{4}), 2u);
    EXPECT_EQ(multiset_difference_size(V{5, 6}, V{}), 2u);
    EXPECT_EQ(multiset_difference_size(V{}, V{1, 2}), 0u);
}

}  // namespace
}  // namespace tvc
