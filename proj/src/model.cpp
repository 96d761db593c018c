#include "tvcache/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tvcache/error.hpp"

namespace tvc {

double SystemParams::lambda_g() const noexcept {
    switch (lambda_g_source) {
        case LambdaGSource::lambda_u: return lambda_u;
        case LambdaGSource::custom: return lambda_g_custom;
        case LambdaGSource::lambda_s: break;
    }
    return lambda_s;
}

double SystemParams::mean_users() const noexcept { return lambda_u * std::numbers::pi * R * R; }

double SystemParams::mean_sbs() const noexcept { return lambda_s * std::numbers::pi * R * R; }

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument(std::string(name) + " must be positive");
    }
}

}  // namespace

const SystemParams& validate_params(const SystemParams& p) {
    require_positive(p.lambda_u, "lambda_u");
    require_positive(p.lambda_s, "lambda_s");
    require_positive(p.lambda_b, "lambda_b");
    require_positive(p.gamma, "gamma");
    require_positive(p.R, "R");
    require_positive(p.B, "B");
    require_positive(p.R0, "R0");
    require_positive(p.delta_slot, "delta_slot");
    if (p.N < 1) throw InvalidArgument("N must be ≥ 1");
    if (p.M < 1) throw InvalidArgument("M must be ≥ 1");
    if (p.lambda_g_source == LambdaGSource::custom) require_positive(p.lambda_g_custom, "lambda_g");
    return p;
}

CachingPolicy CachingPolicy::uniform(std::size_t n) {
    return CachingPolicy{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

std::size_t RequestTrace::total_requests() const noexcept {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.requests.size();
    return n;
}

void validate_trace(const RequestTrace& trace, double delta_slot) {
    std::int64_t prev = -1;
    bool first = true;
    for (const auto& rec : trace.slots) {
        if (!first && rec.slot <= prev) {
            std::ostringstream os;
            os << "slot indices must be strictly increasing (slot " << rec.slot << " after " << prev << ")";
            throw InvalidArgument(os.str());
        }
        if (rec.slot < 0) throw InvalidArgument("slot indices must be nonnegative");
        first = false;
        prev = rec.slot;
        const double lo = static_cast<double>(rec.slot) * delta_slot;
        const double hi = static_cast<double>(rec.slot + 1) * delta_slot;
        for (const auto& r : rec.requests) {
            if (!(r.time >= lo && r.time < hi)) {
                std::ostringstream os;
                os << "arrival time " << r.time << " outside slot " << rec.slot;
                throw InvalidArgument(os.str());
            }
            if (r.file >= trace.n_files) {
                std::ostringstream os;
                os << "file index " << (r.file + 1) << " outside 1.." << trace.n_files;
                throw InvalidArgument(os.str());
            }
        }
    }
}

bool is_probability_vector(std::span<const double> v, double tol) noexcept {
    if (v.empty()) return false;
    double s = 0.0;
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol;
}

namespace {

double plain_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

PopularityProfile normalize_profile(std::span<const double> raw, std::int64_t slot) {
    if (raw.empty()) throw InvalidArgument("cannot normalize an empty vector");
    for (double x : raw) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("profile weights must be finite and nonnegative");
    }
    std::vector<double> p(raw.begin(), raw.end());
    const double total = plain_sum(p);
    if (!(total > 0.0)) throw InvalidArgument("cannot normalize an all-zero vector");
    if (total == 1.0) return PopularityProfile{std::move(p), slot};

    for (double& x : p) x /= total;
    // Push the rounding residual into the largest entry until the left-to-right
    // sum is exactly 1, so a second pass is the identity.
    const auto largest = static_cast<std::size_t>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
    p[largest] = std::clamp(p[largest] + (1.0 - plain_sum(p)), 0.0, 1.0);
    for (int step = 0; step < 64; ++step) {
        const double s = plain_sum(p);
        if (s == 1.0) break;
        p[largest] = std::nextafter(p[largest], s < 1.0 ? 1.0 : 0.0);
    }
    // Rounding can step over 1 entirely; then the last positive entry absorbs
    // the residual against its exact prefix sum.
    if (plain_sum(p) != 1.0) {
        std::size_t last = p.size();
        while (last > 0 && p[last - 1] == 0.0) --last;
        double prefix = 0.0;
        for (std::size_t i = 0; i + 1 < last; ++i) prefix += p[i];
        const double fixed = 1.0 - prefix;
        if (last > 0 && fixed >= 0.0) p[last - 1] = fixed;
    }
    return PopularityProfile{std::move(p), slot};
}

PopularityProfile zipf_profile(std::uint32_t n, double theta) {
    if (n < 1) throw InvalidArgument("zipf profile needs at least one file");
    std::vector<double> w(n);
    for (std::uint32_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -theta);
    return normalize_profile(w);
}

std::string to_string(LambdaGSource s) {
    switch (s) {
        case LambdaGSource::lambda_u: return "lambda_u";
        case LambdaGSource::custom: return "custom";
        case LambdaGSource::lambda_s: break;
    }
    return "lambda_s";
}

}  // namespace tvc
