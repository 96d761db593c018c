#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tvcache/model.hpp"
#include "tvcache/policy.hpp"
#include "tvcache/rng.hpp"

namespace tvc {

/// Per-file request counts for any slot range, from prefix sums.
class FileCountIndex {
public:
    FileCountIndex(const RequestTrace& trace, std::int64_t horizon);

    /// Counts over slots [begin, end), clamped to [0, horizon).
    std::vector<std::uint64_t> counts(std::int64_t begin, std::int64_t end) const;
    std::uint64_t total(std::int64_t begin, std::int64_t end) const;

    std::int64_t horizon() const noexcept { return horizon_; }
    std::uint32_t n_files() const noexcept { return n_files_; }

private:
    std::int64_t horizon_;
    std::uint32_t n_files_;
    std::vector<std::uint64_t> prefix_;  // (horizon + 1) x n_files, row-major
    std::vector<std::uint64_t> totals_;  // horizon + 1
};

/// Frequencies of the counts; uniform when there are no requests.
PopularityProfile profile_from_counts(std::span<const std::uint64_t> counts, std::int64_t slot = 0);

/// Empirical popularity over the first t slots (slots 0..t-1).
PopularityProfile empirical_popularity(const RequestTrace& trace, std::int64_t t);

/// 2m consecutive blocks a_1..a_2m covering slots 0..t-1.
struct BlockSchedule {
    std::vector<std::int64_t> lengths;
    std::size_t m = 0;

    std::int64_t a_min() const;
    std::int64_t a_max() const;
    std::int64_t total() const;
    /// One-based block index of a slot, 0 if the slot is outside the schedule.
    std::size_t block_of(std::int64_t slot) const;
};

/// Near-equal blocks (a_max - a_min <= 1) with an even count, as close to
/// `target_block` slots each as the parity constraint allows. A target of 0
/// selects ceil(sqrt(t)). Throws for t < 2 or target outside [0, t].
BlockSchedule make_blocks(std::int64_t t, std::int64_t target_block = 0);

struct TaggedRequest {
    std::int64_t slot = 0;
    Request req;
};

enum class Parity { even, odd };

/// Requests of the first t slots split by block parity (block 1 is odd).
struct BlockView {
    std::vector<TaggedRequest> even_requests;
    std::vector<TaggedRequest> odd_requests;
    std::uint32_t n_files = 0;

    const std::vector<TaggedRequest>& requests(Parity h) const { return h == Parity::even ? even_requests : odd_requests; }
    std::vector<std::uint64_t> counts(Parity h) const;
};

BlockView split_even_odd(const RequestTrace& trace, const BlockSchedule& schedule);

enum class SigmaMode { rademacher, all_plus };

struct RademacherOptions {
    unsigned n_sigma = 64;
    SigmaMode sigma_mode = SigmaMode::rademacher;
    OptimizerOptions optimizer{1e-8, 8, 2000};
};

struct RademacherEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t sample_size = 0;   ///< |T_h|
    std::vector<double> draws;     ///< per-sigma sup values
    std::vector<double> envelopes; ///< (B/R0) N max_i |sum sigma 1{.}| / |T_h| per draw
};

/// Monte Carlo estimate of the empirical Rademacher complexity of the
/// offloading-loss class on one parity's requests. Throws when that parity
/// has no requests.
RademacherEstimate empirical_rademacher(const BlockView& view, Parity parity, const SystemParams& params,
                                        const RademacherOptions& options, RngStream& stream);

struct RademacherPair {
    RademacherEstimate even;
    RademacherEstimate odd;
};

RademacherPair empirical_rademacher(const BlockView& view, const SystemParams& params,
                                    const RademacherOptions& options, RngStream& stream);

/// sup over the simplex of sum_i g(pi_i) w_i, computed by the policy
/// optimizer in maximize mode.
double sup_weighted_loss(std::span<const double> weights, const SystemParams& params,
                         const OptimizerOptions& options, RngStream& stream);

struct DiscrepancyEstimate {
    double value = 0.0;
    std::vector<double> per_file;
    std::int64_t window = 0;
};

/// d_i = |p_i(recent) - p_i(reference)|, value = sup_Pi sum g(pi_i) d_i.
DiscrepancyEstimate discrepancy_between(const PopularityProfile& recent, const PopularityProfile& reference,
                                        const SystemParams& params, const OptimizerOptions& options,
                                        RngStream& stream);

struct DiscrepancyOptions {
    std::int64_t window = 50;
    /// End (exclusive) of the reference window; defaults to t - window.
    std::optional<std::int64_t> reference_end;
    std::uint64_t min_requests = 1;
    OptimizerOptions optimizer{1e-8, 4, 2000};
};

/// Windowed drift estimate: recent window [t - w, t) against the reference
/// window ending at `reference_end`. Throws when t < 2w or either window has
/// fewer than `min_requests` requests.
DiscrepancyEstimate empirical_discrepancy(const FileCountIndex& index, std::int64_t t, const SystemParams& params,
                                          const DiscrepancyOptions& options, RngStream& stream);
DiscrepancyEstimate empirical_discrepancy(const RequestTrace& trace, std::int64_t t, const SystemParams& params,
                                          const DiscrepancyOptions& options, RngStream& stream);

/// Discrepancy terms computed from the true per-slot profiles: for each
/// parity, d_i = mean over its requests of |p_{i,slot} - p_{i,target}|.
struct DiscrepancyPair {
    DiscrepancyEstimate even;
    DiscrepancyEstimate odd;
};

DiscrepancyPair true_discrepancy(const BlockView& view, const std::vector<PopularityProfile>& profiles,
                                 const PopularityProfile& target, const SystemParams& params,
                                 const OptimizerOptions& options, RngStream& stream);

}  // namespace tvc
