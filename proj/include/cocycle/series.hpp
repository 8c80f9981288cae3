#pragma once

#include "cocycle/error.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace cocycle {

enum class Method { reduced, exact, montecarlo };

inline const char* method_name(Method m)
{
    switch (m) {
    case Method::reduced: return "reduced";
    case Method::exact: return "exact";
    case Method::montecarlo: return "montecarlo";
    }
    return "?";
}

/// One Cesaro average at horizon N, in two forms:
///   A      = (1/2) integral_B #{n < N : phi_n in E} / N        (occupancy form)
///   triple = (1/N) sum_{n<N} mu(A1 & T^-n A2 & S^-n A3)         (literal correlation)
/// For E not containing 0 the two are tied by triple = m(B)/2 - A.
struct AverageEntry {
    std::uint64_t N = 0;
    double A = 0;
    double stderr_A = 0;
    double triple = 0;
    double stderr_triple = 0;
    double accepted = 1; ///< fraction of theta samples kept by the B filter
};

struct AverageSeries {
    Method method = Method::reduced;
    std::size_t n_theta = 0; ///< samples drawn (0 for exact)
    std::uint64_t seed = 0;
    std::vector<AverageEntry> entries;

    const AverageEntry& at(std::uint64_t N) const
    {
        for (const auto& e : entries) {
            if (e.N == N) return e;
        }
        throw Error(Errc::MissingEntries, "series has no entry at N=" + std::to_string(N));
    }
    bool has(std::uint64_t N) const
    {
        for (const auto& e : entries) {
            if (e.N == N) return true;
        }
        return false;
    }
};

/// Running mean and unbiased variance; values are added in a fixed order.
struct MeanAccumulator {
    std::size_t n = 0;
    double mean = 0;
    double m2 = 0;

    void add(double x)
    {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double stderr_of_mean() const
    {
        if (n < 2) return 0;
        return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

inline std::string series_csv_header() { return "N,A,stderr,method,n_theta,seed,triple,triple_stderr,accepted"; }

inline std::string to_csv(const AverageSeries& s)
{
    std::ostringstream os;
    os.precision(17);
    for (const auto& e : s.entries) {
        os << e.N << ',' << e.A << ',' << e.stderr_A << ',' << method_name(s.method) << ',' << s.n_theta << ','
           << s.seed << ',' << e.triple << ',' << e.stderr_triple << ',' << e.accepted << '\n';
    }
    return os.str();
}

/// |a - b| <= k * sqrt(sa^2 + sb^2); with both errors zero the values must match exactly.
inline bool within_sigma(double a, double sa, double b, double sb, double k)
{
    return std::fabs(a - b) <= k * std::sqrt(sa * sa + sb * sb);
}

} // namespace cocycle
