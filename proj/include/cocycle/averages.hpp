#pragma once

// Cesaro averages of the triple correlation: the reduced walk route, the exact
// partition route, and the diagnostics built on the walk (oscillation against a
// schedule, occupation ratios, ergodicity correlation, range growth).

#include "cocycle/error.hpp"
#include "cocycle/eset.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/random.hpp"
#include "cocycle/rotation.hpp"
#include "cocycle/series.hpp"
#include "cocycle/symbolic.hpp"
#include "cocycle/walk.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cocycle {

namespace detail {

inline void check_horizons(const std::vector<std::uint64_t>& Ns)
{
    if (Ns.empty() || Ns.front() == 0 || !std::is_sorted(Ns.begin(), Ns.end()) ||
        std::adjacent_find(Ns.begin(), Ns.end()) != Ns.end()) {
        throw Error(Errc::InvalidArgument, "N list must be strictly ascending and positive");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Reduced route

/// Per-theta walk counts, averaged over theta samples drawn from `seed`:
///   A      = mean over samples of (1/2) #{n < N : phi_n in E} / N
///   triple = mean over samples of (1/2) #{n < N : [phi_n in E] == [0 in E]} / N
/// Rejected samples contribute zero, so both already carry the factor m(B).
template <HeightSet E>
AverageSeries reduced_average_series(FixedAngle alpha, const E& set, const ThetaFilter& filter,
                                     const std::vector<std::uint64_t>& Ns, std::size_t n_theta, std::uint64_t seed,
                                     unsigned threads = 1)
{
    detail::check_horizons(Ns);
    if (n_theta < 16) {
        throw Error(Errc::InsufficientSamples, "reduced route needs at least 16 theta samples");
    }
    const bool zero_in = set.contains(0);

    struct Counts {
        bool accepted = false;
        std::vector<std::uint64_t> in_e;
    };
    const auto results = parallel_map(n_theta, threads, [&](std::size_t i) {
        Counts c;
        const FixedAngle theta0 = sample_theta(seed, i);
        if (filter && !filter(theta0)) return c;
        c.accepted = true;
        c.in_e.assign(Ns.size(), 0);
        FixedAngle theta = theta0;
        std::int64_t h = 0;
        std::uint64_t count = 0;
        std::size_t next = 0;
        for (std::uint64_t n = 0; next < Ns.size(); ++n) {
            if (Ns[next] == n) c.in_e[next++] = count;
            if (next == Ns.size()) break;
            count += set.contains(h);
            h += phi(theta);
            theta += alpha;
        }
        return c;
    });

    std::size_t accepted = 0;
    for (const auto& r : results) accepted += r.accepted;
    if (accepted == 0) {
        throw Error(Errc::EmptyAfterFilter, "no theta sample passed the filter");
    }

    AverageSeries out;
    out.method = Method::reduced;
    out.n_theta = n_theta;
    out.seed = seed;
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        const auto N = static_cast<double>(Ns[k]);
        MeanAccumulator occ, tri;
        for (const auto& r : results) {
            if (!r.accepted) {
                occ.add(0.0);
                tri.add(0.0);
                continue;
            }
            const auto in_e = static_cast<double>(r.in_e[k]);
            occ.add(0.5 * in_e / N);
            tri.add(0.5 * (zero_in ? in_e : N - in_e) / N);
        }
        AverageEntry e;
        e.N = Ns[k];
        e.A = occ.mean;
        e.stderr_A = occ.stderr_of_mean();
        e.triple = tri.mean;
        e.stderr_triple = tri.stderr_of_mean();
        e.accepted = static_cast<double>(accepted) / static_cast<double>(n_theta);
        out.entries.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact route

/// Unsigned 192-bit accumulator for sums of arc lengths measured in units of 2^-128.
struct Wide {
    u128 lo = 0;
    std::uint64_t hi = 0;

    Wide& operator+=(const Wide& o)
    {
        const u128 s = lo + o.lo;
        hi += o.hi + (s < lo ? 1 : 0);
        lo = s;
        return *this;
    }
    static Wide from(u128 v) { return {v, 0}; }
    static Wide whole() { return {0, 1}; } ///< 2^128, the full circle
    long double to_long_double() const
    {
        return std::ldexp(static_cast<long double>(hi), 128) +
               std::ldexp(static_cast<long double>(static_cast<std::uint64_t>(lo >> 64)), 64) +
               static_cast<long double>(static_cast<std::uint64_t>(lo));
    }
    bool operator==(const Wide&) const = default;
};

/// phi_n as a step function of theta: it is constant on the cells cut out by the
/// points -k alpha and 1/2 - k alpha for k < n.
class PartitionStepFn {
public:
    explicit PartitionStepFn(FixedAngle alpha) : alpha_(alpha), cuts_{0}, values_{0} {}

    std::uint64_t n() const { return n_; }
    std::size_t cells() const { return cuts_.size(); }

    /// phi_n -> phi_{n+1}.
    void step()
    {
        const FixedAngle shift = FixedAngle{0} - advance(FixedAngle{0}, alpha_, n_);
        insert(shift.bits());
        insert((FixedAngle::half() + shift).bits());
        const FixedAngle adv = advance(FixedAngle{0}, alpha_, n_);
        for (std::size_t i = 0; i < cuts_.size(); ++i) {
            values_[i] += phi(FixedAngle{cuts_[i]} + adv);
        }
        ++n_;
    }

    /// Lebesgue measure of {theta : phi_n(theta) in E}, in units of 2^-128.
    template <HeightSet E>
    Wide measure_in(const E& set) const
    {
        Wide total;
        for (std::size_t i = 0; i < cuts_.size(); ++i) {
            if (set.contains(values_[i])) total += length(i);
        }
        return total;
    }

    /// Measure of each level set {phi_n = v}, in units of 2^-128.
    std::map<std::int64_t, Wide> level_measures() const
    {
        std::map<std::int64_t, Wide> out;
        for (std::size_t i = 0; i < cuts_.size(); ++i) out[values_[i]] += length(i);
        return out;
    }

    std::int64_t value_at(FixedAngle theta) const
    {
        const auto it = std::upper_bound(cuts_.begin(), cuts_.end(), theta.bits());
        return values_[static_cast<std::size_t>(it - cuts_.begin()) - 1];
    }

private:
    void insert(u128 p)
    {
        const auto it = std::lower_bound(cuts_.begin(), cuts_.end(), p);
        if (it != cuts_.end() && *it == p) return;
        const auto idx = static_cast<std::size_t>(it - cuts_.begin());
        const std::int64_t inherited = values_[idx - 1];
        cuts_.insert(it, p);
        values_.insert(values_.begin() + static_cast<std::ptrdiff_t>(idx), inherited);
    }

    Wide length(std::size_t i) const
    {
        if (cuts_.size() == 1) return Wide::whole();
        if (i + 1 < cuts_.size()) return Wide::from(cuts_[i + 1] - cuts_[i]);
        return Wide::from(u128{0} - cuts_[i]);
    }

    FixedAngle alpha_;
    std::uint64_t n_ = 0;
    std::vector<u128> cuts_; ///< ascending, cuts_[0] == 0
    std::vector<std::int64_t> values_;
};

inline constexpr std::uint64_t exact_budget = std::uint64_t{1} << 14;

/// Exact averages with B the whole circle:
///   A = (1/2N) sum_{n<N} m(phi_n in E),  triple = A if 0 in E else 1/2 - A.
template <HeightSet E>
AverageSeries exact_average_series(FixedAngle alpha, const E& set, const std::vector<std::uint64_t>& Ns)
{
    detail::check_horizons(Ns);
    if (Ns.back() > exact_budget) {
        throw Error(Errc::BudgetExceeded, "exact route is limited to N <= 16384");
    }
    const bool zero_in = set.contains(0);
    AverageSeries out;
    out.method = Method::exact;
    PartitionStepFn f(alpha);
    Wide acc;
    std::size_t next = 0;
    for (std::uint64_t n = 0; next < Ns.size(); ++n) {
        if (Ns[next] == n) {
            AverageEntry e;
            e.N = n;
            e.A = static_cast<double>(std::ldexp(acc.to_long_double(), -129) / static_cast<long double>(n));
            e.triple = zero_in ? e.A : 0.5 - e.A;
            out.entries.push_back(e);
            ++next;
            if (next == Ns.size()) break;
        }
        acc += f.measure_in(set);
        f.step();
    }
    return out;
}

template <HeightSet E>
AverageEntry exact_average(FixedAngle alpha, const E& set, std::uint64_t N)
{
    return exact_average_series(alpha, set, {N}).entries.front();
}

// ---------------------------------------------------------------------------
// B filters

/// Keeps theta whose occupation score up to `horizon` is at most `threshold`.
struct QuantileFilter {
    FixedAngle alpha;
    std::uint64_t horizon = 0;
    std::int64_t v_max = 0;
    double threshold = 0;
    double quantile = 0;

    bool operator()(FixedAngle theta) const
    {
        WalkOptions opts{decade_checkpoints(16, horizon), v_max};
        return occupation_score(run_walk(theta, alpha, horizon, opts), v_max) <= threshold;
    }
};

/// Threshold at the q-th empirical quantile of occupation scores over calibration samples.
inline QuantileFilter calibrate_quantile_filter(FixedAngle alpha, double q, std::uint64_t horizon, std::int64_t v_max,
                                                std::size_t n_calibration, std::uint64_t seed, unsigned threads = 1)
{
    if (!(q > 0 && q <= 1)) {
        throw Error(Errc::InvalidArgument, "quantile must lie in (0, 1]");
    }
    if (n_calibration < 2 || horizon < 16) {
        throw Error(Errc::InsufficientSamples, "calibration needs 2 samples and horizon >= 16");
    }
    QuantileFilter f{alpha, horizon, v_max, 0, q};
    const WalkOptions opts{decade_checkpoints(16, horizon), v_max};
    auto scores = parallel_map(n_calibration, threads, [&](std::size_t i) {
        const FixedAngle theta = SampleRng(seed, Stream::calibration, i).angle();
        return occupation_score(run_walk(theta, alpha, horizon, opts), v_max);
    });
    std::sort(scores.begin(), scores.end());
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(scores.size()))) - 1;
    f.threshold = scores[std::min(idx, scores.size() - 1)];
    return f;
}

// ---------------------------------------------------------------------------
// Oscillation against a schedule

struct OscillationRow {
    std::size_t m = 0;
    std::optional<std::uint64_t> N_low; ///< l_{m+1}; absent for the last interval
    double A_low = 0;
    double triple_low = 0;
    std::uint64_t N_high = 0; ///< l_m + r_m + 1
    bool has_high = false; ///< N_high lies inside the series span
    double A_high = 0;
    double triple_high = 0;
    bool checked = false; ///< 1/m bounds evaluated
    bool low_ok = true; ///< A(N_low) <= 1/m
    bool high_ok = true; ///< A(N_high) >= 1/2 - 1/m
};

struct OscillationReport {
    std::vector<OscillationRow> rows;
    double min_A = 0;
    double max_A = 0;
    std::uint64_t N_min = 0;
    std::uint64_t N_max = 0;
    bool conditions_pass = false;

    double oscillation() const { return max_A - min_A; }
    bool bounds_ok() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.low_ok && r.high_ok; });
    }
};

/// The horizons l_{m+1} and l_m + r_m + 1 of a desk schedule.
inline std::vector<std::uint64_t> schedule_horizons(const Schedule& schedule)
{
    std::vector<std::uint64_t> out;
    const auto& iv = schedule.intervals;
    for (std::size_t k = 0; k < iv.size(); ++k) {
        out.push_back(static_cast<std::uint64_t>(iv[k].l.exact() + iv[k].r.exact() + 1));
        if (k + 1 < iv.size()) out.push_back(static_cast<std::uint64_t>(iv[k + 1].l.exact()));
    }
    return out;
}

/// Sorted union of `base` and the members of `extra` lying in [lo, hi].
inline std::vector<std::uint64_t> merge_horizons(std::vector<std::uint64_t> base, const std::vector<std::uint64_t>& extra,
                                                 std::uint64_t lo, std::uint64_t hi)
{
    for (auto n : extra) {
        if (n >= lo && n <= hi) base.push_back(n);
    }
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    return base;
}

/// Log-spaced horizons from 10^lo_exp to 10^hi_exp with `per_decade` points per decade.
inline std::vector<std::uint64_t> log_horizons(int lo_exp, int hi_exp, int per_decade)
{
    std::vector<std::uint64_t> out;
    const int steps = (hi_exp - lo_exp) * per_decade;
    for (int k = 0; k <= steps; ++k) {
        const double e = lo_exp + static_cast<double>(k) / per_decade;
        out.push_back(static_cast<std::uint64_t>(std::llround(std::pow(10.0, e))));
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Reads the series at the schedule's natural horizons. Horizons outside the series'
/// span are skipped; horizons inside it must be present.
inline OscillationReport oscillation_report(const AverageSeries& series, const Schedule& schedule,
                                            const ConditionReport& conditions)
{
    if (series.entries.empty()) {
        throw Error(Errc::MissingEntries, "empty series");
    }
    if (schedule.mode != ScheduleMode::desk) {
        throw Error(Errc::PaperModeNotQueryable, "oscillation needs an integer schedule");
    }
    OscillationReport rep;
    rep.conditions_pass = conditions.passes();
    std::uint64_t first = series.entries.front().N;
    std::uint64_t last = 0;
    for (const auto& e : series.entries) {
        first = std::min(first, e.N);
        last = std::max(last, e.N);
    }
    const auto inside = [&](std::uint64_t N) { return N >= first && N <= last; };

    const auto& iv = schedule.intervals;
    for (std::size_t k = 0; k < iv.size(); ++k) {
        const std::size_t m = k + 1;
        OscillationRow row;
        row.m = m;
        row.N_high = static_cast<std::uint64_t>(iv[k].l.exact() + iv[k].r.exact() + 1);
        if (row.N_high > last) break;
        if (inside(row.N_high)) {
            const auto& hi = series.at(row.N_high);
            row.has_high = true;
            row.A_high = hi.A;
            row.triple_high = hi.triple;
        }
        if (k + 1 < iv.size()) {
            const auto n_low = static_cast<std::uint64_t>(iv[k + 1].l.exact());
            if (inside(n_low)) {
                row.N_low = n_low;
                const auto& lo = series.at(n_low);
                row.A_low = lo.A;
                row.triple_low = lo.triple;
            }
        }
        if (rep.conditions_pass) {
            row.checked = true;
            const double inv = 1.0 / static_cast<double>(m);
            row.high_ok = !row.has_high || row.A_high >= 0.5 - inv;
            row.low_ok = !row.N_low || row.A_low <= inv;
        }
        rep.rows.push_back(row);
    }

    const auto [lo_it, hi_it] = std::minmax_element(series.entries.begin(), series.entries.end(),
                                                    [](const auto& a, const auto& b) { return a.A < b.A; });
    rep.min_A = lo_it->A;
    rep.N_min = lo_it->N;
    rep.max_A = hi_it->A;
    rep.N_max = hi_it->N;
    return rep;
}

inline nlohmann::ordered_json to_json(const OscillationReport& rep)
{
    nlohmann::ordered_json j;
    j["oscillation"] = rep.oscillation();
    j["min_A"] = rep.min_A;
    j["N_min"] = rep.N_min;
    j["max_A"] = rep.max_A;
    j["N_max"] = rep.N_max;
    j["conditions_pass"] = rep.conditions_pass;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.rows) {
        nlohmann::ordered_json row;
        row["m"] = r.m;
        row["N_high"] = r.N_high;
        if (r.has_high) {
            row["A_high"] = r.A_high;
            row["triple_high"] = r.triple_high;
            row["bound_high"] = 0.5 - 1.0 / static_cast<double>(r.m);
        }
        if (r.N_low) {
            row["N_low"] = *r.N_low;
            row["A_low"] = r.A_low;
            row["triple_low"] = r.triple_low;
            row["bound_low"] = 1.0 / static_cast<double>(r.m);
        }
        row["checked"] = r.checked;
        row["low_ok"] = r.low_ok;
        row["high_ok"] = r.high_ok;
        j["rows"].push_back(row);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Occupation ratios Psi^(v) / Psi^(0)

struct RatioCell {
    std::int64_t v = 0;
    std::uint64_t n = 0;
    double median_ratio = 0;
    double median_deviation = 0; ///< median of |ratio - 1|
};

struct RatioTable {
    std::vector<std::vector<double>> ratios; ///< [theta][cell]
    std::vector<RatioCell> cells; ///< ordered by v, then n

    const RatioCell& at(std::int64_t v, std::uint64_t n) const
    {
        for (const auto& c : cells) {
            if (c.v == v && c.n == n) return c;
        }
        throw Error(Errc::MissingEntries, "no ratio cell for v=" + std::to_string(v) + " n=" + std::to_string(n));
    }
};

inline double median_of(std::vector<double> xs)
{
    if (xs.empty()) return 0;
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

inline RatioTable ratio_check(FixedAngle alpha, const std::vector<FixedAngle>& thetas, const std::vector<std::int64_t>& vs,
                              const std::vector<std::uint64_t>& ns, unsigned threads = 1)
{
    detail::check_horizons(ns);
    if (thetas.empty()) throw Error(Errc::InsufficientSamples, "ratio check needs theta samples");
    std::int64_t radius = 0;
    for (auto v : vs) radius = std::max(radius, v < 0 ? -v : v);
    const WalkOptions opts{ns, radius};
    RatioTable t;
    t.ratios = parallel_map(thetas.size(), threads, [&](std::size_t i) {
        const auto s = run_walk(thetas[i], alpha, ns.back(), opts);
        std::vector<double> row;
        for (auto v : vs) {
            for (const auto& cp : s.checkpoints) {
                row.push_back(static_cast<double>(cp.psi_at(v)) / static_cast<double>(cp.psi_at(0)));
            }
        }
        return row;
    });
    std::size_t c = 0;
    for (auto v : vs) {
        for (auto n : ns) {
            std::vector<double> r, d;
            for (const auto& row : t.ratios) {
                r.push_back(row[c]);
                d.push_back(std::fabs(row[c] - 1.0));
            }
            t.cells.push_back({v, n, median_of(r), median_of(d)});
            ++c;
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Ergodicity correlation

/// Finite union of half-open arcs [lo, hi) of the circle; hi == 1 is written as the
/// full-circle flag.
struct ArcSet {
    struct Arc {
        FixedAngle lo;
        FixedAngle hi;
        bool to_end = false;
    };
    std::vector<Arc> arcs;

    static ArcSet whole() { return {{{FixedAngle{0}, FixedAngle{0}, true}}}; }

    static ArcSet from_doubles(const std::vector<std::pair<double, double>>& pairs)
    {
        ArcSet s;
        for (const auto& [a, b] : pairs) {
            if (!(a >= 0 && a <= b && b <= 1)) throw Error(Errc::InvalidArgument, "arc endpoints must satisfy 0<=a<=b<=1");
            s.arcs.push_back({FixedAngle::from_double(a), b >= 1 ? FixedAngle{0} : FixedAngle::from_double(b), b >= 1});
        }
        return s;
    }

    bool contains(FixedAngle t) const
    {
        for (const auto& a : arcs) {
            if (t >= a.lo && (a.to_end || t < a.hi)) return true;
        }
        return false;
    }

    long double measure() const
    {
        long double m = 0;
        for (const auto& a : arcs) {
            m += (a.to_end ? 1.0L : a.hi.to_long_double()) - a.lo.to_long_double();
        }
        return m;
    }
};

struct CorrelationEstimate {
    double lhs = 0; ///< (1/N) sum_{n<N} mu(D1 & T^-n D2)
    double lhs_stderr = 0;
    double rhs = 0; ///< mu(D1) mu(D2)
    double walk_prediction = 0; ///< 1/4 + 1/4 E[Psi_N / N], valid for D1 = D2 = circle x [1]_0
};

struct CorrelationOptions {
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

inline CorrelationEstimate ergodicity_correlation(FixedAngle alpha, const ArcSet& arc1, const CylinderSpec& cyl1,
                                                  const ArcSet& arc2, const CylinderSpec& cyl2, std::uint64_t N,
                                                  const CorrelationOptions& opt)
{
    if (N == 0) throw Error(Errc::InvalidArgument, "N must be positive");
    if (opt.samples < 2) throw Error(Errc::InsufficientSamples, "need at least 2 samples");
    const std::int64_t reach = std::max(cyl1.reach(), cyl2.reach());

    struct Sample {
        double hits = 0;
        double psi0 = 0;
    };
    const auto results = parallel_map(opt.samples, opt.threads, [&](std::size_t i) {
        Sample out;
        const FixedAngle theta0 = sample_theta(opt.seed, i);
        const std::uint64_t omega_seed = sample_seed(opt.seed, Stream::correlation, i);
        std::int64_t radius = default_radius(N) + reach;
        for (int attempt = 0;; ++attempt) {
            try {
                SymbolicPoint p{theta0, sample_omega(radius, omega_seed)};
                std::uint64_t hits = 0, zero = 0;
                const bool start_in = arc1.contains(theta0) && cyl1.contains(p.window);
                for (std::uint64_t n = 0; n < N; ++n) {
                    zero += p.window.offset() == 0;
                    hits += start_in && arc2.contains(p.theta) && cyl2.contains(p.window);
                    p = apply_T(std::move(p), alpha);
                }
                out.hits = static_cast<double>(hits) / static_cast<double>(N);
                out.psi0 = static_cast<double>(zero) / static_cast<double>(N);
                return out;
            } catch (const WindowExceeded&) {
                if (attempt == 4) throw;
                radius *= 2;
            }
        }
    });
    MeanAccumulator acc, psi;
    for (const auto& r : results) {
        acc.add(r.hits);
        psi.add(r.psi0);
    }
    CorrelationEstimate est;
    est.lhs = acc.mean;
    est.lhs_stderr = acc.stderr_of_mean();
    est.rhs = static_cast<double>(arc1.measure() * arc2.measure()) * cyl1.measure() * cyl2.measure();
    est.walk_prediction = 0.25 + 0.25 * psi.mean;
    return est;
}

// ---------------------------------------------------------------------------
// Range growth

struct RangeRow {
    std::uint64_t N = 0;
    double mean_ratio = 0; ///< mean over theta of a_N / N
    double max_ratio = 0;
};

inline std::vector<RangeRow> zero_entropy_proxy(FixedAngle alpha, const std::vector<FixedAngle>& thetas,
                                                const std::vector<std::uint64_t>& Ns, unsigned threads = 1)
{
    detail::check_horizons(Ns);
    if (thetas.empty()) throw Error(Errc::InsufficientSamples, "range proxy needs theta samples");
    const WalkOptions opts{Ns, 0};
    const auto per_theta = parallel_map(thetas.size(), threads, [&](std::size_t i) {
        const auto s = run_walk(thetas[i], alpha, Ns.back(), opts);
        std::vector<double> row;
        for (const auto& cp : s.checkpoints) row.push_back(static_cast<double>(cp.range) / static_cast<double>(cp.n));
        return row;
    });
    std::vector<RangeRow> out;
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        MeanAccumulator m;
        double mx = 0;
        for (const auto& row : per_theta) {
            m.add(row[k]);
            mx = std::max(mx, row[k]);
        }
        out.push_back({Ns[k], m.mean, mx});
    }
    return out;
}

} // namespace cocycle
