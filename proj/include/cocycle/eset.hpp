#pragma once

// The height set E = union over m of +-[l_m, l_m + r_m], its schedules, and the
// growth conditions
//   (a) l_1 > 1
//   (b) r_m > l_m  and  C_{l_m} l_m / sqrt(log(l_m + r_m)) < 1/m
//   (c) l_{m+1} > l_m + r_m  and  C_{l_m+r_m} (l_m + r_m + 1) / sqrt(log l_{m+1}) < 1/m
// Inequalities are decided in the rearranged form log(x) > (m C y)^2, which stays
// exact in LogNum arithmetic; the ratio lhs/rhs is reported alongside.

#include "cocycle/error.hpp"
#include "cocycle/lognum.hpp"
#include "cocycle/walk.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cocycle {

/// Anything that can answer "is height v in E?".
template <class S>
concept HeightSet = requires(const S& s, std::int64_t v) {
    { s.contains(v) } -> std::convertible_to<bool>;
};

struct AllHeights {
    bool contains(std::int64_t) const { return true; }
};

struct NoHeights {
    bool contains(std::int64_t) const { return false; }
};

/// Complement of another set; used by fault injection.
template <HeightSet S>
struct Complement {
    const S* base;
    bool contains(std::int64_t v) const { return !base->contains(v); }
};

struct Interval {
    LogNum l;
    LogNum r; ///< covers [l, l + r]
};

enum class ScheduleMode { desk, paper };

/// v -> C_v, nondecreasing.
using BoundFunction = std::function<LogNum(const LogNum&)>;

struct BoundSpec {
    std::string description;
    BoundFunction fn;

    static BoundSpec constant(long double c)
    {
        std::ostringstream os;
        os.precision(17);
        os << "const:" << c;
        return {os.str(), [c](const LogNum&) { return LogNum::real_value(c); }};
    }

    /// C_v = c + slope * log(1 + log(max(v, 1))): nondecreasing and unbounded.
    static BoundSpec loglog(long double c, long double slope)
    {
        std::ostringstream os;
        os.precision(17);
        os << "loglog:" << c << ',' << slope;
        return {os.str(), [c, slope](const LogNum& v) {
                    if (v <= LogNum(1)) return LogNum::real_value(c);
                    const LogNum inner = log(LogNum(1) + log(v));
                    if (!inner.fits_real()) {
                        return LogNum::real_value(c) + scaled(inner, slope);
                    }
                    return LogNum::real_value(c + slope * inner.approx());
                }};
    }

    /// C_v read from an estimated table; throws MissingConstants past its v_max.
    static BoundSpec from_table(std::shared_ptr<const ConstantsTable> table)
    {
        std::ostringstream os;
        os << "table:N=" << table->horizon << ",v_max=" << table->v_max << ",samples=" << table->sample_count
           << ",seed=" << table->seed;
        return {os.str(), [table](const LogNum& v) {
                    if (!v.is_exact() || v.exact() > table->v_max) {
                        throw Error(Errc::MissingConstants, "C_" + v.describe() + " is beyond the table's v_max=" +
                                                                std::to_string(table->v_max));
                    }
                    return LogNum::real_value(table->C_at(v.exact()));
                }};
    }
};

struct Schedule {
    ScheduleMode mode = ScheduleMode::desk;
    std::vector<Interval> intervals;
    std::string bound; ///< provenance of the C_v used to build or check the schedule
    long double target_ratio = 1.0L; ///< paper mode: generator's margin target
};

/// Desk-mode height set: sorted disjoint [lo, hi] pairs mirrored through 0.
class ESet {
public:
    ESet() = default;

    explicit ESet(const Schedule& s)
    {
        if (s.mode != ScheduleMode::desk) {
            throw Error(Errc::PaperModeNotQueryable, "log-space schedules do not support pointwise membership");
        }
        for (const auto& iv : s.intervals) {
            if (!iv.l.is_exact() || !iv.r.is_exact()) {
                throw Error(Errc::PaperModeNotQueryable, "interval endpoint is not an exact integer");
            }
            bounds_.emplace_back(iv.l.exact(), iv.l.exact() + iv.r.exact());
        }
    }

    bool contains(std::int64_t v) const
    {
        const std::int64_t a = v < 0 ? -v : v;
        // first interval whose upper end is >= a
        const auto it = std::lower_bound(bounds_.begin(), bounds_.end(), a,
                                         [](const auto& iv, std::int64_t x) { return iv.second < x; });
        return it != bounds_.end() && it->first <= a;
    }

    const std::vector<std::pair<std::int64_t, std::int64_t>>& bounds() const { return bounds_; }
    bool empty() const { return bounds_.empty(); }

private:
    std::vector<std::pair<std::int64_t, std::int64_t>> bounds_;
};

// ---------------------------------------------------------------------------
// Verification

struct Margin {
    LogNum lhs; ///< m * C * y
    LogNum rhs; ///< sqrt(log x)
    long double ratio = 0; ///< lhs / rhs; the condition asks for < 1
    bool holds = false; ///< decided exactly via log x > lhs^2
};

struct ConditionRow {
    std::size_t m = 0;
    bool order_b = false; ///< r_m > l_m
    Margin b;
    bool has_c = false; ///< false for the last interval (no l_{m+1})
    bool order_c = false; ///< l_{m+1} > l_m + r_m
    Margin c;

    bool passes() const { return order_b && b.holds && (!has_c || (order_c && c.holds)); }
};

struct ConditionReport {
    bool cond_a = false; ///< l_1 > 1
    std::vector<ConditionRow> rows;

    bool passes() const
    {
        if (rows.empty()) return true;
        return cond_a && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passes(); });
    }
    long double max_ratio() const
    {
        long double best = 0;
        for (const auto& r : rows) {
            best = std::max(best, r.b.ratio);
            if (r.has_c) best = std::max(best, r.c.ratio);
        }
        return best;
    }
};

namespace detail {

inline constexpr long double ratio_noise = 64 * std::numeric_limits<long double>::epsilon();

/// Margin of  m * C * y / sqrt(log x) < 1.
inline Margin margin(std::size_t m, const LogNum& C, const LogNum& y, const LogNum& x)
{
    Margin out;
    out.lhs = LogNum(static_cast<std::int64_t>(m)) * C * y;
    const LogNum lx = log(x);
    out.rhs = sqrt(lx);
    out.holds = lx > square(out.lhs);
    out.ratio = std::exp(difference(log(out.lhs), scaled(log(lx), 0.5L), ratio_noise));
    return out;
}

} // namespace detail

inline ConditionReport verify_schedule(const Schedule& s, const BoundFunction& C)
{
    if (!C) {
        throw Error(Errc::MissingConstants, "no bound function supplied");
    }
    ConditionReport rep;
    if (s.intervals.empty()) {
        rep.cond_a = true;
        return rep;
    }
    rep.cond_a = s.intervals.front().l > LogNum(1);
    for (std::size_t i = 0; i < s.intervals.size(); ++i) {
        const auto m = i + 1;
        const auto& iv = s.intervals[i];
        const LogNum end = iv.l + iv.r;
        ConditionRow row;
        row.m = m;
        row.order_b = iv.r > iv.l;
        row.b = detail::margin(m, C(iv.l), iv.l, end);
        if (i + 1 < s.intervals.size()) {
            const auto& next = s.intervals[i + 1];
            row.has_c = true;
            row.order_c = next.l > end;
            row.c = detail::margin(m, C(end), end + LogNum(1), next.l);
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

/// Least x > floor_exclusive with log(x) > threshold (strict) or log(x) >= threshold.
/// Values below 2^62 are exact integers; larger ones are kept in log-space.
inline LogNum least_with_log_above(const LogNum& threshold, bool strict, const LogNum& floor_exclusive)
{
    auto ok = [&](const LogNum& x) {
        if (!(x > floor_exclusive)) return false;
        const int c = compare(log(x), threshold);
        return strict ? c > 0 : c >= 0;
    };
    const long double t = threshold.approx();
    if (std::isfinite(t) && t < 42.0L) {
        auto guess = static_cast<std::int64_t>(std::ceil(std::exp(t)));
        guess = std::max<std::int64_t>(guess, 1);
        if (floor_exclusive.is_exact()) {
            guess = std::max(guess, floor_exclusive.exact() + 1);
        }
        LogNum x(guess);
        while (!ok(x)) x = x + LogNum(1);
        while (x > LogNum(1) && ok(x - LogNum(1))) x = x - LogNum(1);
        return x;
    }
    LogNum x = LogNum::from_log(strict ? threshold.next_real() : threshold);
    if (!(x > floor_exclusive)) {
        x = floor_exclusive + LogNum(1);
    }
    return x;
}

/// Threshold (lhs / rho)^2 for the generator. When the factor 1/rho is absorbed by the
/// offsets of a deep tower the threshold falls back to the strict boundary lhs^2.
inline std::pair<LogNum, bool> scaled_threshold(const LogNum& lhs, long double inv_rho, bool strict)
{
    const LogNum boundary = square(lhs);
    if (strict) return {boundary, true};
    const LogNum t = square(scaled(lhs, inv_rho));
    if (t > boundary) return {t, false};
    return {boundary, true};
}

} // namespace detail

/// Greedy minimal schedule: each r_m and l_{m+1} is the least value meeting its
/// condition with margin ratio <= target_ratio (strictly below 1 when target_ratio == 1).
inline Schedule generate_paper_schedule(const BoundSpec& C, std::size_t m_max, long double target_ratio = 0.99L,
                                        std::int64_t l1 = 2)
{
    if (!(target_ratio > 0 && target_ratio <= 1)) {
        throw Error(Errc::InvalidArgument, "target ratio must lie in (0, 1]");
    }
    if (l1 < 2) {
        throw Error(Errc::BadOrder, "l_1 must exceed 1");
    }
    Schedule s;
    s.mode = ScheduleMode::paper;
    s.bound = C.description;
    s.target_ratio = target_ratio;
    const bool strict = target_ratio == 1.0L;
    const long double inv = 1.0L / target_ratio;

    LogNum l(l1);
    for (std::size_t m = 1; m <= m_max; ++m) {
        const LogNum mm(static_cast<std::int64_t>(m));
        // (b): log(l + r) > (m C_l l / rho)^2 and l + r > 2l.
        const auto [tb, tb_strict] = detail::scaled_threshold(mm * C.fn(l) * l, inv, strict);
        const LogNum end = detail::least_with_log_above(tb, tb_strict, l + l);
        const LogNum r = end - l;
        s.intervals.push_back({l, r});
        if (m == m_max) break;
        // (c): log(l_{m+1}) > (m C_{l+r} (l + r + 1) / rho)^2 and l_{m+1} > l + r.
        const LogNum end_again = l + r;
        const LogNum y = end_again + LogNum(1);
        const auto [tc, tc_strict] = detail::scaled_threshold(mm * C.fn(end_again) * y, inv, strict);
        l = detail::least_with_log_above(tc, tc_strict, end_again);
    }
    return s;
}

/// Copy of `s` with r_m (when `mutate_r`) or l_m moved just below the boundary of the
/// condition that constrains it: (b) for r_m, (c) of row m-1 for l_m (m >= 2). Exact
/// values step to the largest failing integer; log-space values to one ulp under
/// the boundary.
inline Schedule boundary_mutation(const Schedule& s, const BoundFunction& C, std::size_t m, bool mutate_r)
{
    if (m < 1 || m > s.intervals.size() || (!mutate_r && m < 2)) {
        throw Error(Errc::InvalidArgument, "no condition constrains that value");
    }
    auto below = [](const LogNum& threshold) {
        const long double t = threshold.approx();
        if (std::isfinite(t) && t < 42.0L) {
            return detail::least_with_log_above(threshold, true, LogNum(0)) - LogNum(1);
        }
        return LogNum::from_log(threshold).prev_ulp();
    };
    Schedule out = s;
    const LogNum mm(static_cast<std::int64_t>(m));
    if (mutate_r) {
        const auto& iv = s.intervals[m - 1];
        const LogNum end = below(square(mm * C(iv.l) * iv.l));
        out.intervals[m - 1].r = end - iv.l;
    } else {
        const LogNum mp(static_cast<std::int64_t>(m - 1));
        const auto& prev = s.intervals[m - 2];
        const LogNum end = prev.l + prev.r;
        out.intervals[m - 1].l = below(square(mp * C(end) * (end + LogNum(1))));
    }
    return out;
}

/// Desk-scale schedule from explicit (l, r) pairs; the condition report is attached
/// as-is (desk schedules are not expected to meet (b) or (c)).
struct DeskSchedule {
    Schedule schedule;
    ESet set;
    ConditionReport report;
};

inline DeskSchedule make_desk_schedule(const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
                                       const BoundSpec& C)
{
    Schedule s;
    s.mode = ScheduleMode::desk;
    s.bound = C.description;
    std::int64_t prev_end = -1;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [l, r] = pairs[i];
        if (i == 0 && l < 2) {
            throw Error(Errc::BadOrder, "l_1 = " + std::to_string(l) + " but l_1 > 1 is required");
        }
        if (r < 1) {
            throw Error(Errc::BadOrder, "interval " + std::to_string(i + 1) + " has r < 1");
        }
        if (i > 0 && l <= pairs[i - 1].first) {
            throw Error(Errc::BadOrder, "intervals must be listed in increasing order");
        }
        if (i > 0 && l <= prev_end) {
            throw Error(Errc::OverlappingIntervals, "l_" + std::to_string(i + 1) + " = " + std::to_string(l) +
                                                       " does not exceed l+r = " + std::to_string(prev_end) +
                                                       " of the previous interval");
        }
        prev_end = l + r;
        s.intervals.push_back({LogNum(l), LogNum(r)});
    }
    DeskSchedule out{s, ESet(s), {}};
    out.report = verify_schedule(s, C.fn);
    return out;
}

// ---------------------------------------------------------------------------
// Text form: "key = value" lines, '#' comments.

inline std::string schedule_to_text(const Schedule& s)
{
    std::ostringstream os;
    os << "schema = cocycle-schedule/1\n";
    os << "mode = " << (s.mode == ScheduleMode::desk ? "desk" : "paper") << '\n';
    os << "bound = " << s.bound << '\n';
    if (s.mode == ScheduleMode::paper) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%La", s.target_ratio);
        os << "target_ratio = " << buf << '\n';
    }
    os << "intervals = " << s.intervals.size() << '\n';
    for (std::size_t i = 0; i < s.intervals.size(); ++i) {
        const auto& iv = s.intervals[i];
        const auto m = i + 1;
        os << "l." << m << " = " << iv.l.encode() << '\n';
        if (!iv.l.is_exact()) os << "# l." << m << " ~ " << iv.l.describe() << '\n';
        os << "r." << m << " = " << iv.r.encode() << '\n';
        if (!iv.r.is_exact()) os << "# r." << m << " ~ " << iv.r.describe() << '\n';
    }
    return os.str();
}

inline std::map<std::string, std::string> parse_key_values(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        auto trim = [](std::string x) {
            const auto b = x.find_first_not_of(" \t\r");
            const auto e = x.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : x.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline Schedule schedule_from_text(const std::string& text)
{
    const auto kv = parse_key_values(text);
    auto get = [&](const std::string& k) -> const std::string& {
        const auto it = kv.find(k);
        if (it == kv.end()) throw Error(Errc::ParseError, "schedule is missing key '" + k + "'");
        return it->second;
    };
    if (get("schema") != "cocycle-schedule/1") {
        throw Error(Errc::ParseError, "unsupported schedule schema '" + get("schema") + "'");
    }
    Schedule s;
    const auto& mode = get("mode");
    if (mode == "desk") s.mode = ScheduleMode::desk;
    else if (mode == "paper") s.mode = ScheduleMode::paper;
    else throw Error(Errc::ParseError, "unknown schedule mode '" + mode + "'");
    if (auto it = kv.find("bound"); it != kv.end()) s.bound = it->second;
    if (auto it = kv.find("target_ratio"); it != kv.end()) s.target_ratio = std::strtold(it->second.c_str(), nullptr);
    const auto count = std::stoul(get("intervals"));
    for (std::size_t m = 1; m <= count; ++m) {
        s.intervals.push_back({LogNum::decode(get("l." + std::to_string(m))),
                               LogNum::decode(get("r." + std::to_string(m)))});
    }
    return s;
}

inline std::string report_to_text(const ConditionReport& rep)
{
    std::ostringstream os;
    auto margin_line = [&](const std::string& key, const Margin& mg) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.15Lg", mg.ratio);
        os << key << " = " << (mg.holds ? "pass" : "FAIL") << " ratio=" << buf << " lhs=" << mg.lhs.describe()
           << " rhs=" << mg.rhs.describe() << '\n';
    };
    os << "cond.a = " << (rep.cond_a ? "pass" : "FAIL") << '\n';
    for (const auto& row : rep.rows) {
        const auto m = std::to_string(row.m);
        os << "cond.b." << m << ".order = " << (row.order_b ? "pass" : "FAIL") << '\n';
        margin_line("cond.b." + m + ".bound", row.b);
        if (row.has_c) {
            os << "cond.c." << m << ".order = " << (row.order_c ? "pass" : "FAIL") << '\n';
            margin_line("cond.c." + m + ".bound", row.c);
        }
    }
    os << "verdict = " << (rep.passes() ? "pass" : "FAIL") << '\n';
    return os.str();
}

} // namespace cocycle
