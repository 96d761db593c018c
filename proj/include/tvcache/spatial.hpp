#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tvcache/model.hpp"
#include "tvcache/rng.hpp"

namespace tvc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

struct PppRealization {
    std::vector<Point2> sbs_positions;
    std::vector<Point2> user_positions;
    double region_radius = 0.0;
};

/// Indices of the sBSs strictly within gamma of a reference point.
struct Neighborhood {
    std::vector<std::uint32_t> sbs_indices;
};

/// Homogeneous PPP on the disk of `region_radius` centered at the origin.
std::vector<Point2> sample_ppp(double density, double region_radius, RngStream& stream);

/// sBS and user PPPs inside the macro-BS disk of radius params.R.
PppRealization sample_network(const SystemParams& params, RngStream& stream);

Neighborhood neighbors(Point2 point, std::span<const Point2> sbs_positions, double gamma);

/// Writes `x,y,kind` rows (kind is `sbs` or `user`).
void write_realization_csv(std::ostream& os, const PppRealization& realization);

struct MonteCarloEstimate {
    double loss = 0.0;            ///< (B/R0) * empirical miss frequency
    double standard_error = 0.0;  ///< (B/R0) * binomial standard error
    std::uint64_t trials = 0;
    std::uint64_t misses = 0;
};

struct MonteCarloOptions {
    std::uint64_t n_trials = 100000;
    unsigned threads = 1;
    std::uint64_t chunk = 4096;  ///< trials per independent sub-stream
};

/// Typical user at the origin; sBS PPP of density lambda_s on the disk of
/// radius gamma; each sBS draws M i.i.d. entries from the policy; the user
/// draws one file from the profile. A trial misses when no neighbor holds it.
/// Results do not depend on `threads`.
MonteCarloEstimate monte_carlo_offloading_loss(const CachingPolicy& policy, const PopularityProfile& profile,
                                               const SystemParams& params, const MonteCarloOptions& options,
                                               RngStream& stream);

}  // namespace tvc
