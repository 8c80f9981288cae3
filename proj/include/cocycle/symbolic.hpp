#pragma once

// Points of the circle times the two-sided +-1 shift, kept on finite symbol windows.
//
//   T(theta, w)  = (theta + alpha, sigma^{phi(theta)} w),   (sigma w)(s) = w(s + 1)
//   pi_E(w)(s)   = w(s) if s in E, -w(s) otherwise
//   S            = pi_E o T o pi_E
//
// A window stores absolute coordinates [-W, W]; shifting only moves `offset`, and
// reading current coordinate s touches absolute coordinate s + offset.

#include "cocycle/error.hpp"
#include "cocycle/eset.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/random.hpp"
#include "cocycle/rotation.hpp"
#include "cocycle/series.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cocycle {

class SymbolWindow {
public:
    SymbolWindow() : values_(1, 1) {}
    SymbolWindow(std::int64_t radius, std::vector<std::int8_t> values) : radius_(radius), values_(std::move(values))
    {
        if (radius < 0 || values_.size() != static_cast<std::size_t>(2 * radius + 1)) {
            throw Error(Errc::InvalidArgument, "window needs 2W+1 symbols");
        }
    }

    std::int64_t radius() const { return radius_; }
    std::int64_t offset() const { return offset_; }

    bool readable(std::int64_t s) const
    {
        const auto a = s + offset_;
        return a >= -radius_ && a <= radius_;
    }

    /// Symbol at current coordinate s.
    int at(std::int64_t s) const
    {
        const auto a = s + offset_;
        if (a < -radius_ || a > radius_) {
            throw WindowExceeded(a, radius_);
        }
        return values_[static_cast<std::size_t>(a + radius_)];
    }

    /// sigma^k: afterwards coordinate s reads what s + k read before. Throws if
    /// coordinate 0 would leave the window.
    void shift(std::int64_t k)
    {
        const auto next = offset_ + k;
        if (next < -radius_ || next > radius_) {
            throw WindowExceeded(next, radius_);
        }
        offset_ = next;
    }

    template <HeightSet E>
    void flip_outside(const E& set)
    {
        for (std::int64_t a = -radius_; a <= radius_; ++a) {
            if (!set.contains(a - offset_)) {
                auto& v = values_[static_cast<std::size_t>(a + radius_)];
                v = static_cast<std::int8_t>(-v);
            }
        }
    }

    friend bool operator==(const SymbolWindow&, const SymbolWindow&) = default;

private:
    std::int64_t radius_ = 0;
    std::int64_t offset_ = 0;
    std::vector<std::int8_t> values_;
};

/// Symbol at absolute coordinate s for the sequence identified by `seed`. Every
/// coordinate is an independent fair coin, so windows of different radii agree.
inline int omega_symbol(std::uint64_t seed, std::int64_t s)
{
    return (mix64(seed ^ mix64(static_cast<std::uint64_t>(s))) & 1u) ? 1 : -1;
}

/// i.i.d. uniform +-1 on [-W, W]; deterministic in seed.
inline SymbolWindow sample_omega(std::int64_t radius, std::uint64_t seed)
{
    if (radius < 0) {
        throw Error(Errc::InvalidArgument, "window radius must be nonnegative");
    }
    std::vector<std::int8_t> v(static_cast<std::size_t>(2 * radius + 1));
    for (std::int64_t s = -radius; s <= radius; ++s) {
        v[static_cast<std::size_t>(s + radius)] = static_cast<std::int8_t>(omega_symbol(seed, s));
    }
    return SymbolWindow(radius, std::move(v));
}

/// Default window radius for orbits of length N: 4 ceil(log2 N) + 16.
inline std::int64_t default_radius(std::uint64_t N)
{
    const auto bits = N <= 1 ? 0 : std::bit_width(N - 1);
    return 4 * static_cast<std::int64_t>(bits) + 16;
}

struct SymbolicPoint {
    FixedAngle theta;
    SymbolWindow window;

    /// Rejects windows narrower than the caller's height budget up front.
    static SymbolicPoint make(FixedAngle theta, SymbolWindow window, std::int64_t height_budget)
    {
        if (window.radius() < height_budget) {
            throw WindowExceeded(height_budget, window.radius());
        }
        return {theta, std::move(window)};
    }
};

inline SymbolicPoint apply_T(SymbolicPoint p, FixedAngle alpha)
{
    p.window.shift(phi(p.theta));
    p.theta = advance(p.theta, alpha, 1);
    return p;
}

template <HeightSet E>
SymbolWindow apply_pi_E(SymbolWindow w, const E& set)
{
    w.flip_outside(set);
    return w;
}

template <HeightSet E>
SymbolicPoint apply_S(SymbolicPoint p, FixedAngle alpha, const E& set)
{
    p.window.flip_outside(set);
    p = apply_T(std::move(p), alpha);
    p.window.flip_outside(set);
    return p;
}

/// Cylinder {w : w(j) = i for each listed (j, i)}.
struct CylinderSpec {
    std::vector<std::pair<std::int64_t, int>> constraints;

    CylinderSpec() = default;
    explicit CylinderSpec(std::vector<std::pair<std::int64_t, int>> c) : constraints(std::move(c))
    {
        auto sorted = constraints;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (sorted[i].first == sorted[i - 1].first) {
                throw Error(Errc::InvalidArgument, "cylinder coordinates must be distinct");
            }
        }
        for (const auto& [j, i] : constraints) {
            if (i != 1 && i != -1) throw Error(Errc::InvalidArgument, "cylinder symbols must be +-1");
        }
    }

    double measure() const { return std::ldexp(1.0, -static_cast<int>(constraints.size())); }

    std::int64_t reach() const
    {
        std::int64_t r = 0;
        for (const auto& [j, i] : constraints) r = std::max(r, j < 0 ? -j : j);
        return r;
    }

    bool contains(const SymbolWindow& w) const
    {
        for (const auto& [j, i] : constraints) {
            if (w.at(j) != i) return false;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// Triple correlation indicator
//
// A1 = B x Sigma, A2 = A3 = circle x [1]_0.  For x = (theta, w) with h = phi_n(theta):
//   T^n x in A2  <=>  w(h) = 1
//   S^n x in A3  <=>  (pi_E w)(h) * sign_E(0) = 1, sign_E(s) = +1 if s in E else -1
// so the product is  [w(h) = 1] [h in E <=> 0 in E].

struct TripleIndicator {
    bool literal = false; ///< 1_{A2}(T^n x) 1_{A3}(S^n x), by iterating the maps
    bool collapsed = false; ///< [w(h)=1][h in E <=> 0 in E], from the walk height alone
    bool occupancy = false; ///< [w(h)=1][h in E]; its mean over w is 1_E(h)/2
};

template <HeightSet E>
bool collapsed_indicator(const SymbolWindow& omega, std::int64_t height, const E& set)
{
    return omega.at(height) == 1 && set.contains(height) == set.contains(0);
}

template <HeightSet E>
TripleIndicator triple_indicator(FixedAngle theta0, const SymbolWindow& omega, FixedAngle alpha, const E& set,
                                 std::uint64_t n)
{
    SymbolicPoint tp{theta0, omega};
    SymbolicPoint sp{theta0, omega};
    std::int64_t h = 0;
    FixedAngle theta = theta0;
    for (std::uint64_t k = 0; k < n; ++k) {
        h += phi(theta);
        theta = advance(theta, alpha, 1);
        tp = apply_T(std::move(tp), alpha);
        sp = apply_S(std::move(sp), alpha, set);
    }
    TripleIndicator out;
    out.literal = tp.window.at(0) == 1 && sp.window.at(0) == 1;
    out.collapsed = collapsed_indicator(omega, h, set);
    out.occupancy = omega.at(h) == 1 && set.contains(h);
    if (out.literal != out.collapsed) {
        throw std::logic_error("triple indicator: literal orbit and collapsed predicate disagree");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo route

using ThetaFilter = std::function<bool(FixedAngle)>;

struct MonteCarloOptions {
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    ThetaFilter filter; ///< empty: accept every theta
    std::int64_t radius = 0; ///< 0: default_radius(max N)
    bool inject_fault = false; ///< counts the complement of E in the occupancy form
};

namespace detail {

struct SampleCounts {
    bool accepted = false;
    std::vector<std::uint64_t> triple; ///< per N in the list
    std::vector<std::uint64_t> occupancy;
};

template <HeightSet E>
SampleCounts mc_sample(FixedAngle alpha, const E& set, const std::vector<std::uint64_t>& Ns, FixedAngle theta,
                       std::uint64_t omega_seed, std::int64_t radius, bool inject_fault)
{
    SampleCounts out;
    out.accepted = true;
    out.triple.assign(Ns.size(), 0);
    out.occupancy.assign(Ns.size(), 0);
    const SymbolWindow omega = sample_omega(radius, omega_seed);
    SymbolicPoint tp{theta, omega};
    SymbolicPoint sp{theta, omega};
    const bool zero_in = set.contains(0);
    std::int64_t h = 0;
    std::uint64_t triple = 0, occ = 0;
    std::size_t next = 0;
    for (std::uint64_t n = 0; next < Ns.size(); ++n) {
        while (next < Ns.size() && Ns[next] == n) {
            out.triple[next] = triple;
            out.occupancy[next] = occ;
            ++next;
        }
        if (next == Ns.size()) break;
        const bool literal = tp.window.at(0) == 1 && sp.window.at(0) == 1;
        const bool up = omega.at(h) == 1;
        const bool in_e = set.contains(h);
        if (literal != (up && in_e == zero_in)) {
            throw std::logic_error("triple indicator: literal orbit and collapsed predicate disagree");
        }
        triple += literal;
        occ += up && (inject_fault ? !in_e : in_e);
        h += phi(tp.theta);
        tp = apply_T(std::move(tp), alpha);
        sp = apply_S(std::move(sp), alpha, set);
    }
    return out;
}

} // namespace detail

/// Samples (theta, w), follows both orbits literally, and averages the triple
/// indicator and the occupancy indicator over n < N for every N in Ns.
template <HeightSet E>
AverageSeries mc_triple_average(FixedAngle alpha, const E& set, const std::vector<std::uint64_t>& Ns,
                                const MonteCarloOptions& opt)
{
    if (!std::is_sorted(Ns.begin(), Ns.end()) || Ns.empty() || Ns.front() == 0) {
        throw Error(Errc::InvalidArgument, "N list must be ascending and positive");
    }
    if (opt.samples < 2) {
        throw Error(Errc::InsufficientSamples, "Monte Carlo needs at least 2 samples");
    }
    const std::int64_t radius0 = opt.radius > 0 ? opt.radius : default_radius(Ns.back());

    auto results = parallel_map(opt.samples, opt.threads, [&](std::size_t i) {
        const FixedAngle theta = sample_theta(opt.seed, i);
        if (opt.filter && !opt.filter(theta)) {
            return detail::SampleCounts{};
        }
        const std::uint64_t omega_seed = sample_seed(opt.seed, Stream::omega, i);
        std::int64_t radius = radius0;
        for (int attempt = 0;; ++attempt) {
            try {
                return detail::mc_sample(alpha, set, Ns, theta, omega_seed, radius, opt.inject_fault);
            } catch (const WindowExceeded&) {
                if (attempt == 4) throw;
                radius *= 2;
            }
        }
    });

    AverageSeries out;
    out.method = Method::montecarlo;
    out.n_theta = opt.samples;
    out.seed = opt.seed;
    std::size_t accepted = 0;
    for (const auto& r : results) accepted += r.accepted;
    if (accepted == 0) {
        throw Error(Errc::EmptyAfterFilter, "no theta sample passed the filter");
    }
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        MeanAccumulator tri, occ;
        const auto N = static_cast<double>(Ns[k]);
        for (const auto& r : results) {
            tri.add(r.accepted ? static_cast<double>(r.triple[k]) / N : 0.0);
            occ.add(r.accepted ? static_cast<double>(r.occupancy[k]) / N : 0.0);
        }
        AverageEntry e;
        e.N = Ns[k];
        e.A = occ.mean;
        e.stderr_A = occ.stderr_of_mean();
        e.triple = tri.mean;
        e.stderr_triple = tri.stderr_of_mean();
        e.accepted = static_cast<double>(accepted) / static_cast<double>(opt.samples);
        out.entries.push_back(e);
    }
    return out;
}

} // namespace cocycle
