#include "tvcache/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tvcache/error.hpp"

namespace tvc {

FileCountIndex::FileCountIndex(const RequestTrace& trace, std::int64_t horizon)
    : horizon_(std::max<std::int64_t>(horizon, 0)), n_files_(trace.n_files) {
    const auto rows = static_cast<std::size_t>(horizon_) + 1;
    prefix_.assign(rows * n_files_, 0);
    totals_.assign(rows, 0);
    std::vector<std::uint64_t> slot_counts(static_cast<std::size_t>(horizon_) * n_files_, 0);
    std::vector<std::uint64_t> slot_totals(static_cast<std::size_t>(horizon_), 0);
    for (const auto& rec : trace.slots) {
        if (rec.slot < 0 || rec.slot >= horizon_) continue;
        const auto base = static_cast<std::size_t>(rec.slot) * n_files_;
        for (const auto& r : rec.requests) ++slot_counts[base + r.file];
        slot_totals[static_cast<std::size_t>(rec.slot)] += rec.requests.size();
    }
    for (std::size_t s = 0; s < static_cast<std::size_t>(horizon_); ++s) {
        for (std::uint32_t i = 0; i < n_files_; ++i) {
            prefix_[(s + 1) * n_files_ + i] = prefix_[s * n_files_ + i] + slot_counts[s * n_files_ + i];
        }
        totals_[s + 1] = totals_[s] + slot_totals[s];
    }
}

std::vector<std::uint64_t> FileCountIndex::counts(std::int64_t begin, std::int64_t end) const {
    begin = std::clamp<std::int64_t>(begin, 0, horizon_);
    end = std::clamp<std::int64_t>(end, begin, horizon_);
    std::vector<std::uint64_t> out(n_files_);
    const auto b = static_cast<std::size_t>(begin) * n_files_;
    const auto e = static_cast<std::size_t>(end) * n_files_;
    for (std::uint32_t i = 0; i < n_files_; ++i) out[i] = prefix_[e + i] - prefix_[b + i];
    return out;
}

std::uint64_t FileCountIndex::total(std::int64_t begin, std::int64_t end) const {
    begin = std::clamp<std::int64_t>(begin, 0, horizon_);
    end = std::clamp<std::int64_t>(end, begin, horizon_);
    return totals_[static_cast<std::size_t>(end)] - totals_[static_cast<std::size_t>(begin)];
}

PopularityProfile profile_from_counts(std::span<const std::uint64_t> counts, std::int64_t slot) {
    const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    std::vector<double> p(counts.size());
    if (total == 0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(counts.size()));
    } else {
        for (std::size_t i = 0; i < counts.size(); ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    }
    return PopularityProfile{std::move(p), slot};
}

PopularityProfile empirical_popularity(const RequestTrace& trace, std::int64_t t) {
    if (t < 1) throw InvalidArgument("empirical_popularity: t must be ≥ 1");
    std::vector<std::uint64_t> counts(trace.n_files, 0);
    for (const auto& rec : trace.slots) {
        if (rec.slot < 0 || rec.slot >= t) continue;
        for (const auto& r : rec.requests) ++counts[r.file];
    }
    return profile_from_counts(counts, t - 1);
}

std::int64_t BlockSchedule::a_min() const { return lengths.empty() ? 0 : *std::min_element(lengths.begin(), lengths.end()); }
std::int64_t BlockSchedule::a_max() const { return lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end()); }
std::int64_t BlockSchedule::total() const { return std::accumulate(lengths.begin(), lengths.end(), std::int64_t{0}); }

std::size_t BlockSchedule::block_of(std::int64_t slot) const {
    if (slot < 0) return 0;
    std::int64_t end = 0;
    for (std::size_t b = 0; b < lengths.size(); ++b) {
        end += lengths[b];
        if (slot < end) return b + 1;
    }
    return 0;
}

BlockSchedule make_blocks(std::int64_t t, std::int64_t target_block) {
    if (t < 2) throw InvalidArgument("make_blocks: t must be ≥ 2 (need one odd and one even block)");
    if (target_block < 0 || target_block > t) throw InvalidArgument("make_blocks: target_block must lie in [1, t]");
    if (target_block == 0) target_block = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(t))));

    std::int64_t n_blocks = (t + target_block - 1) / target_block;
    if (n_blocks % 2 != 0) ++n_blocks;
    if (n_blocks > t) n_blocks = t - t % 2;

    BlockSchedule out;
    const std::int64_t base = t / n_blocks;
    const std::int64_t extra = t % n_blocks;
    out.lengths.resize(static_cast<std::size_t>(n_blocks));
    for (std::int64_t b = 0; b < n_blocks; ++b) out.lengths[static_cast<std::size_t>(b)] = base + (b < extra ? 1 : 0);
    out.m = static_cast<std::size_t>(n_blocks / 2);
    return out;
}

std::vector<std::uint64_t> BlockView::counts(Parity h) const {
    std::vector<std::uint64_t> c(n_files, 0);
    for (const auto& r : requests(h)) ++c[r.req.file];
    return c;
}

BlockView split_even_odd(const RequestTrace& trace, const BlockSchedule& schedule) {
    BlockView view;
    view.n_files = trace.n_files;
    const auto horizon = schedule.total();
    for (const auto& rec : trace.slots) {
        if (rec.slot < 0 || rec.slot >= horizon) continue;
        const auto block = schedule.block_of(rec.slot);
        auto& dst = (block % 2 == 1) ? view.odd_requests : view.even_requests;
        for (const auto& r : rec.requests) dst.push_back(TaggedRequest{rec.slot, r});
    }
    return view;
}

double sup_weighted_loss(std::span<const double> weights, const SystemParams& params, const OptimizerOptions& options,
                         RngStream& stream) {
    const auto objective =
        LossObjective::from_weights(std::vector<double>(weights.begin(), weights.end()), params, Direction::maximize);
    return optimize_policy(objective, options, stream).objective_value;
}

RademacherEstimate empirical_rademacher(const BlockView& view, Parity parity, const SystemParams& params,
                                        const RademacherOptions& options, RngStream& stream) {
    const auto& reqs = view.requests(parity);
    if (reqs.empty()) {
        throw InvalidArgument(std::string("empirical_rademacher: no requests in the ") +
                              (parity == Parity::even ? "even" : "odd") + " blocks");
    }
    if (options.n_sigma < 1) throw InvalidArgument("empirical_rademacher: n_sigma must be ≥ 1");

    const double size = static_cast<double>(reqs.size());
    auto sigma_rng = stream.split("sigma");
    auto opt_rng = stream.split("sup");

    RademacherEstimate est;
    est.sample_size = reqs.size();
    std::vector<double> signed_sum(view.n_files);
    std::vector<double> weights(view.n_files);
    for (unsigned k = 0; k < options.n_sigma; ++k) {
        std::fill(signed_sum.begin(), signed_sum.end(), 0.0);
        // Only sigma_{i,s} with X(s) = i survives the indicator, so one sign
        // per request suffices.
        for (const auto& r : reqs) {
            const bool plus = options.sigma_mode == SigmaMode::all_plus || (sigma_rng() & 1u) != 0;
            signed_sum[r.req.file] += plus ? 1.0 : -1.0;
        }
        double largest = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = std::abs(signed_sum[i]);
            largest = std::max(largest, weights[i]);
        }
        const double sup = sup_weighted_loss(weights, params, options.optimizer, opt_rng);
        est.draws.push_back(sup / size);
        est.envelopes.push_back(params.miss_cost() * static_cast<double>(view.n_files) * largest / size);
    }
    const double n = static_cast<double>(est.draws.size());
    const double mean = std::accumulate(est.draws.begin(), est.draws.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : est.draws) ss += (d - mean) * (d - mean);
    est.value = mean;
    est.standard_error = est.draws.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return est;
}

RademacherPair empirical_rademacher(const BlockView& view, const SystemParams& params,
                                    const RademacherOptions& options, RngStream& stream) {
    auto even_rng = stream.split("even");
    auto odd_rng = stream.split("odd");
    return RademacherPair{empirical_rademacher(view, Parity::even, params, options, even_rng),
                          empirical_rademacher(view, Parity::odd, params, options, odd_rng)};
}

DiscrepancyEstimate discrepancy_between(const PopularityProfile& recent, const PopularityProfile& reference,
                                        const SystemParams& params, const OptimizerOptions& options,
                                        RngStream& stream) {
    if (recent.size() != reference.size()) throw InvalidArgument("discrepancy: profile lengths differ");
    DiscrepancyEstimate est;
    est.per_file.resize(recent.size());
    bool any = false;
    for (std::size_t i = 0; i < recent.size(); ++i) {
        est.per_file[i] = std::abs(recent.probs[i] - reference.probs[i]);
        any |= est.per_file[i] > 0.0;
    }
    est.value = any ? sup_weighted_loss(est.per_file, params, options, stream) : 0.0;
    return est;
}

DiscrepancyEstimate empirical_discrepancy(const FileCountIndex& index, std::int64_t t, const SystemParams& params,
                                          const DiscrepancyOptions& options, RngStream& stream) {
    const auto w = options.window;
    if (w < 1) throw InvalidArgument("empirical_discrepancy: window must be ≥ 1");
    if (t < 2 * w) throw InvalidArgument("empirical_discrepancy: need t ≥ 2 * window");
    const auto ref_end = options.reference_end.value_or(t - w);
    if (ref_end < w || ref_end > t) throw InvalidArgument("empirical_discrepancy: reference window out of range");

    const auto recent = index.counts(t - w, t);
    const auto reference = index.counts(ref_end - w, ref_end);
    const auto n_recent = std::accumulate(recent.begin(), recent.end(), std::uint64_t{0});
    const auto n_reference = std::accumulate(reference.begin(), reference.end(), std::uint64_t{0});
    if (n_recent < options.min_requests || n_reference < options.min_requests) {
        throw InvalidArgument("empirical_discrepancy: too few requests in a window (" + std::to_string(n_recent) +
                              " recent, " + std::to_string(n_reference) + " reference); use a larger window");
    }
    auto est = discrepancy_between(profile_from_counts(recent), profile_from_counts(reference), params,
                                   options.optimizer, stream);
    est.window = w;
    return est;
}

DiscrepancyEstimate empirical_discrepancy(const RequestTrace& trace, std::int64_t t, const SystemParams& params,
                                          const DiscrepancyOptions& options, RngStream& stream) {
    return empirical_discrepancy(FileCountIndex(trace, t), t, params, options, stream);
}

DiscrepancyPair true_discrepancy(const BlockView& view, const std::vector<PopularityProfile>& profiles,
                                 const PopularityProfile& target, const SystemParams& params,
                                 const OptimizerOptions& options, RngStream& stream) {
    auto one = [&](Parity h, RngStream& rng) {
        const auto& reqs = view.requests(h);
        DiscrepancyEstimate est;
        est.per_file.assign(view.n_files, 0.0);
        if (reqs.empty()) return est;
        for (const auto& r : reqs) {
            const auto& p = profiles.at(static_cast<std::size_t>(r.slot)).probs;
            for (std::size_t i = 0; i < est.per_file.size(); ++i) est.per_file[i] += std::abs(p[i] - target.probs[i]);
        }
        bool any = false;
        for (double& d : est.per_file) {
            d /= static_cast<double>(reqs.size());
            any |= d > 0.0;
        }
        est.value = any ? sup_weighted_loss(est.per_file, params, options, rng) : 0.0;
        return est;
    };
    auto even_rng = stream.split("even");
    auto odd_rng = stream.split("odd");
    return DiscrepancyPair{one(Parity::even, even_rng), one(Parity::odd, odd_rng)};
}

}  // namespace tvc
