#include "tvcache/spatial.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "tvcache/error.hpp"
#include "tvcache/io.hpp"
#include "tvcache/parallel.hpp"

namespace tvc {

std::vector<Point2> sample_ppp(double density, double region_radius, RngStream& stream) {
    if (!(density >= 0.0)) throw InvalidArgument("sample_ppp: density must be nonnegative");
    if (!(region_radius > 0.0)) throw InvalidArgument("sample_ppp: region_radius must be positive");
    const double mean = density * std::numbers::pi * region_radius * region_radius;
    if (mean == 0.0) return {};
    const auto count = std::poisson_distribution<std::uint64_t>(mean)(stream);
    std::vector<Point2> pts(count);
    for (auto& p : pts) {
        // sqrt(U) radius gives a uniform density on the disk.
        const double r = region_radius * std::sqrt(stream.uniform());
        const double theta = 2.0 * std::numbers::pi * stream.uniform();
        p = Point2{r * std::cos(theta), r * std::sin(theta)};
    }
    return pts;
}

PppRealization sample_network(const SystemParams& params, RngStream& stream) {
    auto sbs_stream = stream.split("sbs");
    auto user_stream = stream.split("users");
    PppRealization out;
    out.region_radius = params.R;
    out.sbs_positions = sample_ppp(params.lambda_s, params.R, sbs_stream);
    out.user_positions = sample_ppp(params.lambda_u, params.R, user_stream);
    return out;
}

Neighborhood neighbors(Point2 point, std::span<const Point2> sbs_positions, double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("neighbors: gamma must be positive");
    Neighborhood nb;
    const double g2 = gamma * gamma;
    for (std::size_t i = 0; i < sbs_positions.size(); ++i) {
        const double dx = sbs_positions[i].x - point.x;
        const double dy = sbs_positions[i].y - point.y;
        if (dx * dx + dy * dy < g2) nb.sbs_indices.push_back(static_cast<std::uint32_t>(i));
    }
    return nb;
}

void write_realization_csv(std::ostream& os, const PppRealization& realization) {
    os << "x,y,kind\n";
    for (const auto& p : realization.sbs_positions) os << format_double(p.x) << ',' << format_double(p.y) << ",sbs\n";
    for (const auto& p : realization.user_positions) os << format_double(p.x) << ',' << format_double(p.y) << ",user\n";
}

MonteCarloEstimate monte_carlo_offloading_loss(const CachingPolicy& policy, const PopularityProfile& profile,
                                               const SystemParams& params, const MonteCarloOptions& options,
                                               RngStream& stream) {
    if (options.n_trials < 1) throw InvalidArgument("monte_carlo_offloading_loss: n_trials must be ≥ 1");
    if (policy.size() != profile.size()) throw InvalidArgument("monte_carlo_offloading_loss: dimension mismatch");

    const std::uint64_t chunk = std::max<std::uint64_t>(1, options.chunk);
    const std::uint64_t n_chunks = (options.n_trials + chunk - 1) / chunk;
    std::vector<std::uint64_t> misses(n_chunks, 0);

    parallel_for(n_chunks, options.threads, [&](std::size_t c) {
        auto rng = stream.split(static_cast<std::uint64_t>(c));
        std::discrete_distribution<std::uint32_t> cache_draw(policy.probs.begin(), policy.probs.end());
        std::discrete_distribution<std::uint32_t> request_draw(profile.probs.begin(), profile.probs.end());
        const std::uint64_t begin = c * chunk;
        const std::uint64_t end = std::min(options.n_trials, begin + chunk);
        std::uint64_t local = 0;
        for (std::uint64_t t = begin; t < end; ++t) {
            const auto sbs = sample_ppp(params.lambda_s, params.gamma, rng);
            const auto nb = neighbors(Point2{}, sbs, params.gamma);
            const auto wanted = request_draw(rng);
            bool hit = false;
            for (std::size_t k = 0; k < nb.sbs_indices.size(); ++k) {
                // Every neighbor fills its whole cache so the stream layout
                // does not depend on where the first hit occurs.
                for (std::uint32_t j = 0; j < params.M; ++j) hit |= (cache_draw(rng) == wanted);
            }
            if (!hit) ++local;
        }
        misses[c] = local;
    });

    MonteCarloEstimate est;
    est.trials = options.n_trials;
    for (auto m : misses) est.misses += m;
    const double freq = static_cast<double>(est.misses) / static_cast<double>(est.trials);
    est.loss = params.miss_cost() * freq;
    est.standard_error = params.miss_cost() * std::sqrt(freq * (1.0 - freq) / static_cast<double>(est.trials));
    return est;
}

}  // namespace tvc
