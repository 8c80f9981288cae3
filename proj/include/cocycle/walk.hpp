#pragma once

// The discrepancy cocycle phi_n(theta) = sum_{k<n} phi(theta + k alpha), viewed as a
// deterministic +-1 walk on the integers, with its occupation statistics.

#include "cocycle/error.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cocycle {

struct WalkState {
    FixedAngle theta0;
    FixedAngle alpha;
    std::uint64_t n = 0;
    FixedAngle theta_n; ///< theta0 + n alpha
    std::int64_t height = 0; ///< phi_n(theta0)

    static WalkState start(FixedAngle theta0, FixedAngle alpha) { return {theta0, alpha, 0, theta0, 0}; }
};

inline WalkState walk_step(const WalkState& s)
{
    const int step = phi(s.theta_n);
    if ((step > 0 && s.height == std::numeric_limits<std::int64_t>::max()) ||
        (step < 0 && s.height == std::numeric_limits<std::int64_t>::min())) {
        throw Error(Errc::HeightOverflow, "walk height left the 64-bit range");
    }
    return {s.theta0, s.alpha, s.n + 1, advance(s.theta_n, s.alpha, 1), s.height + step};
}

/// Visit counts per height. Stored densely over [lo, hi]; the visited heights of a
/// +-1 walk started at 0 always form a contiguous interval.
class OccupationHistogram {
public:
    void add(std::int64_t v)
    {
        if (counts_.empty()) {
            origin_ = v;
            counts_.assign(1, 0);
        } else if (v < origin_) {
            const auto grow = static_cast<std::size_t>(origin_ - v);
            counts_.insert(counts_.begin(), grow, 0);
            origin_ = v;
        } else if (v >= origin_ + static_cast<std::int64_t>(counts_.size())) {
            counts_.resize(static_cast<std::size_t>(v - origin_ + 1), 0);
        }
        ++counts_[static_cast<std::size_t>(v - origin_)];
        ++total_;
    }

    std::uint64_t count(std::int64_t v) const
    {
        if (counts_.empty() || v < origin_ || v >= origin_ + static_cast<std::int64_t>(counts_.size())) {
            return 0;
        }
        return counts_[static_cast<std::size_t>(v - origin_)];
    }

    std::uint64_t total() const { return total_; }
    bool empty() const { return total_ == 0; }
    std::int64_t lowest() const { return origin_; }
    std::int64_t highest() const { return origin_ + static_cast<std::int64_t>(counts_.size()) - 1; }

    /// Nonzero entries only.
    std::map<std::int64_t, std::uint64_t> sparse() const
    {
        std::map<std::int64_t, std::uint64_t> out;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            if (counts_[i]) {
                out.emplace(origin_ + static_cast<std::int64_t>(i), counts_[i]);
            }
        }
        return out;
    }

private:
    std::int64_t origin_ = 0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Snapshot taken when the walk has made n steps: `height` is phi_n and `psi` holds
/// Psi_n^(v) for v in [-radius, radius] (index v + radius).
struct Checkpoint {
    std::uint64_t n = 0;
    std::int64_t height = 0;
    std::int64_t range = 0; ///< a_n
    std::vector<std::uint64_t> psi;

    std::uint64_t psi_at(std::int64_t v) const
    {
        const auto radius = static_cast<std::int64_t>(psi.size() / 2);
        if (psi.empty() || v < -radius || v > radius) {
            return 0;
        }
        return psi[static_cast<std::size_t>(v + radius)];
    }
};

struct WalkSummary {
    FixedAngle theta0;
    std::uint64_t N = 0;
    OccupationHistogram histogram; ///< phi_0 .. phi_{N-1}
    std::int64_t min_height = 0;
    std::int64_t max_height = 0;
    std::int64_t range = 0; ///< a_N = number of distinct heights among phi_0 .. phi_{N-1}
    std::int64_t final_height = 0; ///< phi_N
    std::vector<Checkpoint> checkpoints;
};

struct WalkOptions {
    std::vector<std::uint64_t> checkpoints; ///< ascending; values above N are ignored
    std::int64_t psi_radius = 0; ///< how many levels each checkpoint snapshots
};

inline WalkSummary run_walk(FixedAngle theta0, FixedAngle alpha, std::uint64_t N, const WalkOptions& opts = {})
{
    if (N == 0) {
        throw Error(Errc::InvalidArgument, "walk length N must be at least 1");
    }
    if (N > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw Error(Errc::HeightOverflow, "walk length exceeds the 64-bit height range");
    }
    if (!std::is_sorted(opts.checkpoints.begin(), opts.checkpoints.end())) {
        throw Error(Errc::InvalidArgument, "checkpoints must be ascending");
    }

    WalkSummary out;
    out.theta0 = theta0;
    out.N = N;
    auto& hist = out.histogram;

    auto snapshot = [&](std::uint64_t n, std::int64_t h) {
        Checkpoint cp{n, h, hist.empty() ? 0 : hist.highest() - hist.lowest() + 1, {}};
        cp.psi.resize(static_cast<std::size_t>(2 * opts.psi_radius + 1));
        for (std::int64_t v = -opts.psi_radius; v <= opts.psi_radius; ++v) {
            cp.psi[static_cast<std::size_t>(v + opts.psi_radius)] = hist.count(v);
        }
        out.checkpoints.push_back(std::move(cp));
    };

    std::size_t next_cp = 0;
    const auto& cps = opts.checkpoints;
    std::int64_t h = 0;
    FixedAngle theta = theta0;
    for (std::uint64_t n = 0; n < N; ++n) {
        while (next_cp < cps.size() && cps[next_cp] == n) {
            snapshot(n, h);
            ++next_cp;
        }
        hist.add(h);
        h += phi(theta);
        theta += alpha;
    }
    while (next_cp < cps.size() && cps[next_cp] == N) {
        snapshot(N, h);
        ++next_cp;
    }

    out.min_height = hist.lowest();
    out.max_height = hist.highest();
    out.range = out.max_height - out.min_height + 1;
    out.final_height = h;
    return out;
}

/// Psi_N^(v): how many of phi_0 .. phi_{N-1} equal v.
inline std::uint64_t psi(const WalkSummary& s, std::int64_t v) { return s.histogram.count(v); }

inline std::int64_t range_stat(const WalkSummary& s) { return s.range; }

/// theta0_hex,N,min_h,max_h,a_N,v:count,...
inline std::string walk_csv_header() { return "theta0_hex,N,min_h,max_h,a_N,counts"; }

inline std::string to_csv_row(const WalkSummary& s)
{
    std::ostringstream os;
    os << s.theta0.hex() << ',' << s.N << ',' << s.min_height << ',' << s.max_height << ',' << s.range;
    for (const auto& [v, c] : s.histogram.sparse()) {
        os << ',' << v << ':' << c;
    }
    return os.str();
}

/// Powers of ten in [lo, hi], plus hi itself.
inline std::vector<std::uint64_t> decade_checkpoints(std::uint64_t lo, std::uint64_t hi)
{
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 1; p <= hi; p *= 10) {
        if (p >= lo) {
            out.push_back(p);
        }
        if (p > hi / 10) {
            break;
        }
    }
    if (out.empty() || out.back() != hi) {
        out.push_back(hi);
    }
    return out;
}

/// Psi * sqrt(log n) / n, the normalisation under which Psi_n is bounded for badly
/// approximable rotations.
inline double aaronson_ratio(std::uint64_t psi_value, std::uint64_t n)
{
    const double dn = static_cast<double>(n);
    return static_cast<double>(psi_value) * std::sqrt(std::log(dn)) / dn;
}

// ---------------------------------------------------------------------------
// Empirical occupation constants

struct ConstantsTable {
    std::uint64_t horizon = 0;
    std::int64_t v_max = 0;
    std::vector<std::uint64_t> checkpoints;
    std::vector<double> M; ///< M_v for v in [-v_max, v_max], index v + v_max
    std::vector<double> C; ///< C_v = max{M_u : |u| <= v}, v in [0, v_max]
    double global_M = 0; ///< sup_theta Psi_N / mean_theta Psi_N at the horizon
    double mean_psi_ratio = 0; ///< mean_theta Psi_N sqrt(log N) / N
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    std::optional<double> quantile;

    double M_at(std::int64_t v) const { return M.at(static_cast<std::size_t>(v + v_max)); }

    /// Throws MissingConstants for |v| beyond the estimated range.
    double C_at(std::int64_t v) const
    {
        const auto a = v < 0 ? -v : v;
        if (a > v_max) {
            throw Error(Errc::MissingConstants,
                        "C_" + std::to_string(a) + " requested but table stops at v_max=" + std::to_string(v_max));
        }
        return C[static_cast<std::size_t>(a)];
    }
};

/// Maximum of Psi_n^(v) sqrt(log n)/n over |v| <= v_max and checkpoints n >= 16.
inline double occupation_score(const WalkSummary& s, std::int64_t v_max)
{
    double best = 0;
    for (const auto& cp : s.checkpoints) {
        if (cp.n < 16) continue;
        for (std::int64_t v = -v_max; v <= v_max; ++v) {
            best = std::max(best, aaronson_ratio(cp.psi_at(v), cp.n));
        }
    }
    return best;
}

inline ConstantsTable estimate_constants(FixedAngle alpha, const std::vector<FixedAngle>& theta_samples,
                                         std::uint64_t N, std::int64_t v_max, std::uint64_t seed = 0,
                                         unsigned threads = 1, std::vector<std::uint64_t> checkpoints = {})
{
    if (theta_samples.size() < 2) {
        throw Error(Errc::InsufficientSamples, "need at least 2 theta samples");
    }
    if (N < 16) {
        throw Error(Errc::InsufficientSamples, "horizon N must be at least 16");
    }
    if (v_max < 0) {
        throw Error(Errc::InvalidArgument, "v_max must be nonnegative");
    }
    if (checkpoints.empty()) {
        checkpoints = decade_checkpoints(16, N);
    }
    std::erase_if(checkpoints, [&](std::uint64_t n) { return n < 16 || n > N; });
    if (checkpoints.empty() || checkpoints.back() != N) {
        checkpoints.push_back(N);
    }

    const WalkOptions opts{checkpoints, v_max};
    const auto summaries = parallel_map(theta_samples.size(), threads, [&](std::size_t i) {
        auto s = run_walk(theta_samples[i], alpha, N, opts);
        s.histogram = {}; // only checkpoints are needed
        return s;
    });

    ConstantsTable t;
    t.horizon = N;
    t.v_max = v_max;
    t.checkpoints = checkpoints;
    t.M.assign(static_cast<std::size_t>(2 * v_max + 1), 0.0);
    t.sample_count = theta_samples.size();
    t.seed = seed;

    double sup_final = 0;
    double sum_final = 0;
    for (const auto& s : summaries) {
        for (const auto& cp : s.checkpoints) {
            for (std::int64_t v = -v_max; v <= v_max; ++v) {
                auto& m = t.M[static_cast<std::size_t>(v + v_max)];
                m = std::max(m, aaronson_ratio(cp.psi_at(v), cp.n));
            }
        }
        const auto final_psi = static_cast<double>(s.checkpoints.back().psi_at(0));
        sup_final = std::max(sup_final, final_psi);
        sum_final += final_psi;
    }
    const double mean_final = sum_final / static_cast<double>(summaries.size());
    t.global_M = mean_final > 0 ? sup_final / mean_final : 0.0;
    t.mean_psi_ratio = mean_final * std::sqrt(std::log(static_cast<double>(N))) / static_cast<double>(N);

    t.C.resize(static_cast<std::size_t>(v_max + 1));
    double running = 0;
    for (std::int64_t v = 0; v <= v_max; ++v) {
        running = std::max({running, t.M_at(v), t.M_at(-v)});
        t.C[static_cast<std::size_t>(v)] = running;
    }
    return t;
}

} // namespace cocycle
