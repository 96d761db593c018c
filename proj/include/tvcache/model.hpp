#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tvc {

/// Which density enters the void-probability exponent of g(.).
enum class LambdaGSource { lambda_s, lambda_u, custom };

/// Physical and model constants of the heterogeneous network.
struct SystemParams {
    double lambda_u = 1e-4;   ///< user density, points / m^2
    double lambda_s = 1e-5;   ///< small-cell BS density, points / m^2
    double lambda_b = 1e-5;   ///< macro BS density, points / m^2
    double gamma = 500.0;     ///< sBS communication radius, m
    double R = 1000.0;        ///< macro BS coverage radius, m
    std::uint32_t N = 100;    ///< library size
    std::uint32_t M = 10;     ///< cache entries drawn per sBS
    double B = 1.0;           ///< file size, bits
    double R0 = 1.0;          ///< backhaul rate, bits/s
    double delta_slot = 1.0;  ///< slot width, s
    LambdaGSource lambda_g_source = LambdaGSource::lambda_s;
    double lambda_g_custom = 0.0;

    /// Density used inside g(.): lambda_s by default.
    double lambda_g() const noexcept;
    /// B / R0, the per-miss time overhead.
    double miss_cost() const noexcept { return B / R0; }
    /// lambda_u * pi * R^2, the mean number of users under the macro BS.
    double mean_users() const noexcept;
    /// lambda_s * pi * R^2, the mean number of sBSs under the macro BS.
    double mean_sbs() const noexcept;

    bool operator==(const SystemParams&) const = default;
};

/// Returns `p` unchanged or throws InvalidArgument naming the offending field.
const SystemParams& validate_params(const SystemParams& p);

/// Per-slot popularity vector P^(t).
struct PopularityProfile {
    std::vector<double> probs;
    std::int64_t slot = 0;

    std::size_t size() const noexcept { return probs.size(); }
    bool operator==(const PopularityProfile&) const = default;
};

/// Random-caching distribution Pi on the N-simplex.
struct CachingPolicy {
    std::vector<double> probs;

    std::size_t size() const noexcept { return probs.size(); }
    bool operator==(const CachingPolicy&) const = default;

    static CachingPolicy uniform(std::size_t n);
};

/// One request event. `file` is zero-based internally; the trace file format
/// stores it one-based.
struct Request {
    double time = 0.0;
    std::uint32_t user = 0;
    std::uint32_t file = 0;

    bool operator==(const Request&) const = default;
};

struct SlotRecord {
    std::int64_t slot = 0;
    std::vector<Request> requests;

    bool operator==(const SlotRecord&) const = default;
};

/// Time-stamped requests grouped by slot, slot indices strictly increasing.
struct RequestTrace {
    std::vector<SlotRecord> slots;
    std::uint32_t n_files = 0;

    std::size_t total_requests() const noexcept;
    bool operator==(const RequestTrace&) const = default;
};

/// Throws InvalidArgument when slots are out of order, arrival instants fall
/// outside their slot, or file indices are out of range.
void validate_trace(const RequestTrace& trace, double delta_slot);

/// Checks entries in [0,1] summing to 1 within 1e-12.
bool is_probability_vector(std::span<const double> v, double tol = 1e-12) noexcept;

/// Rescales a nonnegative vector to sum to one. Throws on an all-zero or
/// negative/non-finite input.
PopularityProfile normalize_profile(std::span<const double> raw, std::int64_t slot = 0);

/// p_i proportional to i^-theta, i = 1..n.
PopularityProfile zipf_profile(std::uint32_t n, double theta);

std::string to_string(LambdaGSource s);

}  // namespace tvc
