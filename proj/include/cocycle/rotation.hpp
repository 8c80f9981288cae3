#pragma once

// Exact circle arithmetic: angles are 128-bit fixed-point fractions of a turn.

#include "cocycle/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cocycle {

using u128 = unsigned __int128;

/// Element of the circle [0,1), stored as bits / 2^128.
class FixedAngle {
public:
    static constexpr u128 half_bits = u128{1} << 127;

    constexpr FixedAngle() = default;
    constexpr explicit FixedAngle(u128 bits) : bits_(bits) {}

    static constexpr FixedAngle zero() { return FixedAngle{}; }
    static constexpr FixedAngle half() { return FixedAngle{half_bits}; }

    /// Exact for every double in [0,1) (a double carries at most 53 significant bits).
    static FixedAngle from_double(double x)
    {
        x -= std::floor(x);
        if (x <= 0.0) {
            return FixedAngle{};
        }
        int exp = 0;
        const double mant = std::frexp(x, &exp); // x = mant * 2^exp, mant in [0.5,1)
        const auto m = static_cast<std::uint64_t>(std::ldexp(mant, 53));
        const int shift = 128 + exp - 53;
        if (shift >= 0) {
            return FixedAngle{static_cast<u128>(m) << shift};
        }
        return FixedAngle{static_cast<u128>(m) >> (-shift)};
    }

    static FixedAngle from_hex(std::string_view hex)
    {
        if (hex.starts_with("0x") || hex.starts_with("0X")) {
            hex.remove_prefix(2);
        }
        if (hex.empty() || hex.size() > 32) {
            throw Error(Errc::ParseError, "angle hex must have 1..32 digits");
        }
        u128 v = 0;
        for (char c : hex) {
            unsigned d;
            if (c >= '0' && c <= '9') d = static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f') d = static_cast<unsigned>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') d = static_cast<unsigned>(c - 'A' + 10);
            else throw Error(Errc::ParseError, "bad hex digit in angle");
            v = (v << 4) | d;
        }
        if (hex.size() < 32) {
            v <<= 4 * (32 - hex.size());
        }
        return FixedAngle{v};
    }

    constexpr u128 bits() const { return bits_; }
    constexpr std::uint64_t hi() const { return static_cast<std::uint64_t>(bits_ >> 64); }
    constexpr std::uint64_t lo() const { return static_cast<std::uint64_t>(bits_); }

    long double to_long_double() const
    {
        return std::ldexp(static_cast<long double>(hi()), -64) +
               std::ldexp(static_cast<long double>(lo()), -128);
    }
    double to_double() const { return static_cast<double>(to_long_double()); }

    /// 32 lowercase hex digits, most significant first.
    std::string hex() const
    {
        static constexpr char digits[] = "0123456789abcdef";
        std::string s(32, '0');
        u128 v = bits_;
        for (int i = 31; i >= 0; --i) {
            s[static_cast<std::size_t>(i)] = digits[static_cast<unsigned>(v & 0xF)];
            v >>= 4;
        }
        return s;
    }

    constexpr FixedAngle operator+(FixedAngle o) const { return FixedAngle{bits_ + o.bits_}; }
    constexpr FixedAngle operator-(FixedAngle o) const { return FixedAngle{bits_ - o.bits_}; }
    constexpr FixedAngle operator-() const { return FixedAngle{u128{0} - bits_}; }
    constexpr FixedAngle& operator+=(FixedAngle o)
    {
        bits_ += o.bits_;
        return *this;
    }

    constexpr auto operator<=>(const FixedAngle&) const = default;

private:
    u128 bits_ = 0;
};

/// theta + n*alpha (mod 1). Multiplication and addition wrap mod 2^128, so this is exact.
constexpr FixedAngle advance(FixedAngle theta, FixedAngle alpha, std::uint64_t n)
{
    return FixedAngle{theta.bits() + static_cast<u128>(n) * alpha.bits()};
}

/// +1 on [0,1/2), -1 on [1/2,1).
constexpr int phi(FixedAngle theta) { return theta.bits() < FixedAngle::half_bits ? 1 : -1; }

// ---------------------------------------------------------------------------
// Rotation numbers

enum class AlphaPreset { golden, sqrt2m1, sqrt3m1, custom };

/// Continued fraction [a0; q1, q2, ..., (p1, ..., pk)] with the parenthesised block
/// repeating forever. An empty period means a finite (rational) expansion.
struct AlphaSpec {
    AlphaPreset preset = AlphaPreset::golden;
    std::uint64_t a0 = 0;
    std::vector<std::uint64_t> preperiod;
    std::vector<std::uint64_t> period;
    std::uint64_t bound = 0; ///< declared K; 0 means "max of the listed quotients"

    static AlphaSpec golden() { return {AlphaPreset::golden, 0, {}, {1}, 1}; }
    static AlphaSpec sqrt2m1() { return {AlphaPreset::sqrt2m1, 0, {}, {2}, 2}; }
    static AlphaSpec sqrt3m1() { return {AlphaPreset::sqrt3m1, 0, {}, {1, 2}, 2}; }
    static AlphaSpec custom(std::uint64_t a0, std::vector<std::uint64_t> pre,
                            std::vector<std::uint64_t> per, std::uint64_t k = 0)
    {
        return {AlphaPreset::custom, a0, std::move(pre), std::move(per), k};
    }

    std::string to_string() const
    {
        switch (preset) {
        case AlphaPreset::golden: return "golden";
        case AlphaPreset::sqrt2m1: return "sqrt2m1";
        case AlphaPreset::sqrt3m1: return "sqrt3m1";
        case AlphaPreset::custom: break;
        }
        std::ostringstream os;
        os << "cf:" << a0 << ';';
        for (std::size_t i = 0; i < preperiod.size(); ++i) {
            os << (i ? "," : "") << preperiod[i];
        }
        if (!period.empty()) {
            os << (preperiod.empty() ? "(" : ",(");
            for (std::size_t i = 0; i < period.size(); ++i) {
                os << (i ? "," : "") << period[i];
            }
            os << ')';
        }
        if (bound) {
            os << '@' << bound;
        }
        return os.str();
    }
};

namespace detail {

inline std::uint64_t parse_quotient(std::string_view tok)
{
    if (tok.empty()) {
        throw Error(Errc::MalformedAlpha, "empty partial quotient");
    }
    std::uint64_t v = 0;
    for (char c : tok) {
        if (c < '0' || c > '9') {
            throw Error(Errc::MalformedAlpha, "non-numeric partial quotient '" + std::string(tok) + "'");
        }
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
}

inline std::vector<std::uint64_t> parse_quotient_list(std::string_view s)
{
    std::vector<std::uint64_t> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        out.push_back(parse_quotient(s.substr(0, comma)));
        if (comma == std::string_view::npos) {
            break;
        }
        s.remove_prefix(comma + 1);
    }
    return out;
}

} // namespace detail

/// Parses "golden", "sqrt2m1", "sqrt3m1" or "cf:A0;Q1,Q2,(P1,P2)@K".
inline AlphaSpec parse_alpha(std::string_view text)
{
    if (text == "golden") return AlphaSpec::golden();
    if (text == "sqrt2m1") return AlphaSpec::sqrt2m1();
    if (text == "sqrt3m1") return AlphaSpec::sqrt3m1();
    if (!text.starts_with("cf:")) {
        throw Error(Errc::UnknownPreset, "'" + std::string(text) + "'");
    }
    text.remove_prefix(3);
    AlphaSpec spec;
    spec.preset = AlphaPreset::custom;
    if (const auto at = text.find('@'); at != std::string_view::npos) {
        spec.bound = detail::parse_quotient(text.substr(at + 1));
        text = text.substr(0, at);
    }
    const auto semi = text.find(';');
    spec.a0 = detail::parse_quotient(text.substr(0, semi));
    if (semi == std::string_view::npos) {
        return spec;
    }
    text.remove_prefix(semi + 1);
    const auto open = text.find('(');
    if (open != std::string_view::npos) {
        const auto close = text.find(')', open);
        if (close == std::string_view::npos || close + 1 != text.size()) {
            throw Error(Errc::MalformedAlpha, "period must be a trailing '(...)' block");
        }
        spec.period = detail::parse_quotient_list(text.substr(open + 1, close - open - 1));
        text = text.substr(0, open);
        if (text.ends_with(',')) {
            text.remove_suffix(1);
        }
    }
    spec.preperiod = detail::parse_quotient_list(text);
    return spec;
}

/// Rounds the continued fraction to the nearest 128-bit angle (error <= 2^-129 + 2^-260).
inline FixedAngle resolve_alpha(const AlphaSpec& spec)
{
    using boost::multiprecision::cpp_int;

    std::uint64_t max_q = 0;
    for (auto q : spec.preperiod) max_q = std::max(max_q, q);
    for (auto q : spec.period) max_q = std::max(max_q, q);
    for (auto q : spec.preperiod) {
        if (q == 0) throw Error(Errc::MalformedAlpha, "partial quotients must be positive");
    }
    for (auto q : spec.period) {
        if (q == 0) throw Error(Errc::MalformedAlpha, "partial quotients must be positive");
    }
    const std::uint64_t bound = spec.bound ? spec.bound : max_q;
    if (max_q > bound) {
        throw Error(Errc::UnboundedQuotients,
                    "partial quotient " + std::to_string(max_q) + " exceeds declared bound " +
                        std::to_string(bound));
    }
    if (spec.period.empty()) {
        throw Error(Errc::FiniteCF, "finite continued fraction is rational; alpha must be irrational");
    }

    // Convergents p_n/q_n of the fractional part; p_{-1}=1, q_{-1}=0, p_0=0, q_0=1.
    cpp_int p_prev = 1, q_prev = 0, p = 0, q = 1;
    const cpp_int limit = cpp_int{1} << 130;
    std::size_t i = 0;
    while (q <= limit) {
        const std::uint64_t a = i < spec.preperiod.size()
                                    ? spec.preperiod[i]
                                    : spec.period[(i - spec.preperiod.size()) % spec.period.size()];
        ++i;
        cpp_int p_next = a * p + p_prev;
        cpp_int q_next = a * q + q_prev;
        p_prev = std::move(p);
        q_prev = std::move(q);
        p = std::move(p_next);
        q = std::move(q_next);
    }
    const cpp_int scaled = ((p << 129) + q) / (2 * q); // round(p * 2^128 / q)
    const cpp_int mask = (cpp_int{1} << 128) - 1;
    const cpp_int low = scaled & mask;
    const auto hi = static_cast<std::uint64_t>(low >> 64);
    const auto lo = static_cast<std::uint64_t>(low & cpp_int{0xFFFFFFFFFFFFFFFFull});
    return FixedAngle{(static_cast<u128>(hi) << 64) | lo};
}

} // namespace cocycle
