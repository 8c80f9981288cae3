#pragma once

// Positive reals far beyond floating-point range, as offset exponential towers:
//
//     value = d[0] + exp(d[1] + exp(d[2] + ... + exp(d[k] + base)))
//
// `base` is set once when a number is lifted into a tower and is never rescaled;
// multiplicative constants and small additive corrections land in the offsets d[i].
// Two numbers derived from the same base therefore differ only in their offsets,
// which are compared exactly, so ratios like  c*x / sqrt(log(exp((c*x/rho)^2)))
// come out as rho even when x itself is a tower of height 10.
//
// Integers below 2^63 take an exact fast path.

#include "cocycle/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cocycle {

class LogNum {
public:
    using real = long double;

    /// exp() of a plain argument above this stays in tower form.
    static constexpr real plain_exp_limit = 10000.0L;
    /// Relative size below which a summand is absorbed.
    static constexpr real absorb_ln_ratio = -200.0L;

    LogNum() : LogNum(std::int64_t{0}) {}
    LogNum(std::int64_t v) : d_{0}, base_(static_cast<real>(v)), exact_(v) {}
    LogNum(int v) : LogNum(static_cast<std::int64_t>(v)) {}

    static LogNum real_value(real v)
    {
        LogNum x;
        x.exact_.reset();
        x.base_ = v;
        x.d_ = {0};
        x.try_exact();
        return x;
    }

    /// The number whose natural log is `ln_value`, kept in log-space (never collapsed
    /// to a plain float, whatever its size).
    static LogNum from_log(const LogNum& ln_value)
    {
        LogNum x;
        x.exact_.reset();
        x.base_ = ln_value.base_;
        x.d_.clear();
        x.d_.push_back(0);
        x.d_.insert(x.d_.end(), ln_value.d_.begin(), ln_value.d_.end());
        return x;
    }

    std::size_t levels() const { return d_.size() - 1; }
    bool is_exact() const { return exact_.has_value(); }
    std::int64_t exact() const { return exact_.value(); }
    bool is_plain() const { return levels() == 0; }
    real base() const { return base_; }
    const std::vector<real>& offsets() const { return d_; }

    /// Best long double approximation; +inf when out of range.
    real approx() const
    {
        if (exact_) return static_cast<real>(*exact_);
        real x = d_.back() + base_;
        for (std::size_t i = d_.size() - 1; i-- > 0;) {
            x = d_[i] + std::exp(x);
        }
        return x;
    }

    bool fits_real() const { return std::isfinite(approx()); }

    // -- structure ---------------------------------------------------------

    /// The exponent: for a tower d0 + exp(F), returns F.
    LogNum inner() const
    {
        LogNum f;
        f.exact_.reset();
        f.base_ = base_;
        f.d_.assign(d_.begin() + 1, d_.end());
        return f;
    }

    // -- arithmetic --------------------------------------------------------

    friend LogNum log(const LogNum& a)
    {
        if (a.is_plain()) {
            const real v = a.approx();
            if (!(v > 0)) {
                throw Error(Errc::InvalidArgument, "log of a nonpositive LogNum");
            }
            if (a.exact_) {
                return real_value(std::log(static_cast<real>(*a.exact_)));
            }
            // Keep a large base intact when only the offset is nonzero.
            if (a.d_[0] != 0 && std::fabs(a.d_[0]) < std::fabs(a.base_) * 1e-3L) {
                LogNum r = real_value(std::log(a.base_));
                r.add_offset(std::log1p(a.d_[0] / a.base_));
                return r;
            }
            return real_value(std::log(v));
        }
        LogNum f = a.inner();
        if (a.d_[0] != 0) {
            const real fv = f.approx();
            if (std::isfinite(fv) && fv < 11000) {
                f.add_offset(std::log1p(a.d_[0] * std::exp(-fv)));
            }
        }
        return f;
    }

    friend LogNum exp(const LogNum& a)
    {
        if (a.is_plain()) {
            const real x = a.base_ + a.d_[0];
            if (x <= plain_exp_limit) {
                return real_value(std::exp(x));
            }
        }
        return from_log(a);
    }

    friend LogNum operator+(const LogNum& a, const LogNum& b)
    {
        if (a.exact_ && b.exact_) {
            std::int64_t s;
            if (!__builtin_add_overflow(*a.exact_, *b.exact_, &s)) return LogNum(s);
        }
        if (a.is_plain() && b.is_plain()) {
            return plain_sum(a, b, 1);
        }
        if (b.is_plain()) {
            LogNum r = a;
            r.exact_.reset();
            r.d_[0] += b.base_ + b.d_[0];
            return r;
        }
        if (a.is_plain()) {
            return b + a;
        }
        const LogNum a1 = a.without_outer_offset();
        const LogNum b1 = b.without_outer_offset();
        const bool a_big = compare(a1, b1) >= 0;
        const LogNum& hi = a_big ? a1 : b1;
        const LogNum& lo = a_big ? b1 : a1;
        const real ln_ratio = difference(log(lo), log(hi));
        LogNum r = hi;
        if (ln_ratio >= absorb_ln_ratio) {
            LogNum l = log(hi);
            l.add_offset(std::log1p(std::exp(ln_ratio)));
            r = exp(l);
        }
        return r.plus_outer(a.d_[0] + b.d_[0]);
    }

    friend LogNum operator-(const LogNum& a, const LogNum& b)
    {
        if (a.exact_ && b.exact_) {
            std::int64_t s;
            if (!__builtin_sub_overflow(*a.exact_, *b.exact_, &s)) return LogNum(s);
        }
        if (a.is_plain() && b.is_plain()) {
            return plain_sum(a, b, -1);
        }
        if (b.is_plain()) {
            LogNum r = a;
            r.d_[0] -= b.base_ + b.d_[0];
            return r;
        }
        if (a.is_plain()) {
            if (a.fits_real() && b.fits_real()) {
                return real_value(a.approx() - b.approx());
            }
            throw Error(Errc::InvalidArgument, "LogNum subtraction would leave the positive reals");
        }
        const LogNum a1 = a.without_outer_offset();
        const LogNum b1 = b.without_outer_offset();
        const real ln_ratio = difference(log(b1), log(a1));
        if (!(ln_ratio < 0)) {
            if (ln_ratio == 0) {
                return real_value(a.d_[0] - b.d_[0]);
            }
            if (a.fits_real() && b.fits_real()) {
                return real_value(a.approx() - b.approx());
            }
            throw Error(Errc::InvalidArgument, "LogNum subtraction would leave the positive reals");
        }
        LogNum r = a1;
        if (ln_ratio >= absorb_ln_ratio) {
            LogNum l = log(a1);
            l.add_offset(std::log1p(-std::exp(ln_ratio)));
            r = exp(l);
        }
        return r.plus_outer(a.d_[0] - b.d_[0]);
    }

    friend LogNum operator*(const LogNum& a, const LogNum& b)
    {
        if (a.exact_ && b.exact_) {
            std::int64_t p;
            if (!__builtin_mul_overflow(*a.exact_, *b.exact_, &p)) return LogNum(p);
        }
        if (a.is_plain() && b.is_plain()) {
            const real p = a.approx() * b.approx();
            if (std::isfinite(p) && std::fabs(p) < std::exp(plain_exp_limit)) {
                return real_value(p);
            }
        }
        if (b.is_plain() && !a.is_plain()) return scaled(a, b.approx());
        if (a.is_plain() && !b.is_plain()) return scaled(b, a.approx());
        return exp(log(a) + log(b));
    }

    friend LogNum operator/(const LogNum& a, const LogNum& b)
    {
        if (b.is_plain()) {
            const real c = b.approx();
            if (a.is_plain()) return real_value(a.approx() / c);
            return scaled(a, 1.0L / c);
        }
        return exp(log(a) + scaled(log(b), -1.0L));
    }

    friend LogNum sqrt(const LogNum& a)
    {
        if (a.is_plain()) {
            return real_value(std::sqrt(a.approx()));
        }
        return exp(scaled(log(a), 0.5L));
    }

    friend LogNum square(const LogNum& a) { return a * a; }

    /// a * c for a plain positive constant c, keeping tower bases untouched.
    friend LogNum scaled(const LogNum& a, real c)
    {
        if (a.is_plain()) {
            if (a.exact_) {
                const real p = static_cast<real>(*a.exact_) * c;
                if (std::nearbyint(c) == c && std::fabs(p) < 9.2e18L) {
                    return LogNum(static_cast<std::int64_t>(p));
                }
            }
            LogNum r = a;
            r.exact_.reset();
            r.base_ *= c;
            r.d_[0] *= c;
            r.try_exact();
            return r;
        }
        if (!(c > 0)) {
            if (c == 0) return LogNum(0);
            throw Error(Errc::InvalidArgument, "negative scale of a tower LogNum");
        }
        LogNum r = a;
        r.d_[0] *= c;
        r.d_[1] += std::log(c);
        return r;
    }

    // -- comparison --------------------------------------------------------

    /// a - b as a long double (+-inf when the gap is out of floating-point range).
    /// Numbers sharing a base are differenced offset by offset, without rounding the base.
    /// With `noise` > 0, offset gaps within noise * max(1, |offset|) count as zero; this
    /// absorbs rounding in offsets built along different paths.
    friend real difference(const LogNum& a, const LogNum& b, real noise = 0)
    {
        if (a.exact_ && b.exact_) {
            return static_cast<real>(static_cast<__int128>(*a.exact_) - static_cast<__int128>(*b.exact_));
        }
        const auto outer_gap = [&](real da, real db) {
            const real g = da - db;
            if (noise > 0 && std::fabs(g) <= noise * std::max({real{1}, std::fabs(da), std::fabs(db)})) return real{0};
            return g;
        };
        if (a.is_plain() && b.is_plain()) {
            if (a.base_ == b.base_) return outer_gap(a.d_[0], b.d_[0]);
            const real db = a.base_ - b.base_;
            const real dd = a.d_[0] - b.d_[0];
            return db + dd;
        }
        if (a.levels() == b.levels() && a.base_ == b.base_) {
            const real delta = difference(a.inner(), b.inner(), noise);
            if (delta == 0) return outer_gap(a.d_[0], b.d_[0]);
            const real fb = b.inner().approx();
            if (std::isfinite(fb)) {
                const real ln_mag = fb + std::log(std::fabs(std::expm1(delta)));
                if (ln_mag < 11000) {
                    return std::copysign(std::exp(ln_mag), delta) + (a.d_[0] - b.d_[0]);
                }
            }
            return std::copysign(std::numeric_limits<real>::infinity(), delta);
        }
        const real av = a.approx();
        const real bv = b.approx();
        if (std::isfinite(av) && std::isfinite(bv)) {
            return av - bv;
        }
        if (std::isfinite(av)) return -std::numeric_limits<real>::infinity();
        if (std::isfinite(bv)) return std::numeric_limits<real>::infinity();
        // Both out of range: compare exponents.
        const real delta = difference(a.inner(), b.inner(), noise);
        if (delta == 0) return outer_gap(a.d_[0], b.d_[0]);
        return std::copysign(std::numeric_limits<real>::infinity(), delta);
    }

    friend int compare(const LogNum& a, const LogNum& b)
    {
        const real d = difference(a, b);
        return d > 0 ? 1 : (d < 0 ? -1 : 0);
    }

    friend bool operator<(const LogNum& a, const LogNum& b) { return compare(a, b) < 0; }
    friend bool operator>(const LogNum& a, const LogNum& b) { return compare(a, b) > 0; }
    friend bool operator<=(const LogNum& a, const LogNum& b) { return compare(a, b) <= 0; }
    friend bool operator>=(const LogNum& a, const LogNum& b) { return compare(a, b) >= 0; }
    friend bool operator==(const LogNum& a, const LogNum& b) { return compare(a, b) == 0; }

    /// The next representable value downward: exact integers step by 1, otherwise the
    /// innermost offset moves by one ulp.
    LogNum prev_ulp() const
    {
        if (exact_) return LogNum(*exact_ - 1);
        LogNum r = *this;
        auto& slot = r.d_.back();
        if (slot != 0) {
            slot = std::nextafter(slot, -std::numeric_limits<real>::infinity());
        } else {
            r.base_ = std::nextafter(r.base_, -std::numeric_limits<real>::infinity());
        }
        return r;
    }

    LogNum next_ulp() const
    {
        if (exact_) return LogNum(*exact_ + 1);
        return next_real();
    }

    /// Next representable real above the value, stepping the floating slot even when
    /// the value is an exact integer.
    LogNum next_real() const
    {
        LogNum r = *this;
        r.exact_.reset();
        auto& slot = r.d_.back();
        if (slot != 0) {
            slot = std::nextafter(slot, std::numeric_limits<real>::infinity());
        } else {
            r.base_ = std::nextafter(r.base_, std::numeric_limits<real>::infinity());
        }
        return r;
    }

    // -- text ----------------------------------------------------------------

    /// Lossless encoding: a decimal integer for exact values, otherwise
    /// "tower:<k>:<base>:<d0>,...,<dk>" with hexadecimal floats.
    std::string encode() const
    {
        if (exact_) return std::to_string(*exact_);
        std::string s = "tower:" + std::to_string(levels()) + ":" + hexfloat(base_) + ":";
        for (std::size_t i = 0; i < d_.size(); ++i) {
            if (i) s += ',';
            s += hexfloat(d_[i]);
        }
        return s;
    }

    static LogNum decode(std::string_view text)
    {
        if (!text.starts_with("tower:")) {
            std::int64_t v = 0;
            bool neg = false;
            std::size_t i = 0;
            if (!text.empty() && text[0] == '-') {
                neg = true;
                i = 1;
            }
            if (i == text.size()) throw Error(Errc::ParseError, "empty LogNum");
            for (; i < text.size(); ++i) {
                const char c = text[i];
                if (c < '0' || c > '9' || __builtin_mul_overflow(v, 10, &v) ||
                    __builtin_add_overflow(v, c - '0', &v)) {
                    throw Error(Errc::ParseError, "bad LogNum '" + std::string(text) + "'");
                }
            }
            return LogNum(neg ? -v : v);
        }
        text.remove_prefix(6);
        const auto c1 = text.find(':');
        const auto c2 = text.find(':', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
            throw Error(Errc::ParseError, "bad tower LogNum");
        }
        const auto k = std::stoul(std::string(text.substr(0, c1)));
        LogNum x;
        x.exact_.reset();
        x.base_ = parse_real(text.substr(c1 + 1, c2 - c1 - 1));
        x.d_.clear();
        std::string_view rest = text.substr(c2 + 1);
        while (true) {
            const auto comma = rest.find(',');
            x.d_.push_back(parse_real(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (x.d_.size() != k + 1) {
            throw Error(Errc::ParseError, "tower offset count does not match its level");
        }
        x.try_exact();
        return x;
    }

    /// Approximate human-readable form, e.g. "8886109", "3.158e+14", "exp^2(6.3e+14)".
    std::string describe() const
    {
        if (exact_) return std::to_string(*exact_);
        const real v = approx();
        char buf[64];
        if (std::isfinite(v)) {
            std::snprintf(buf, sizeof buf, "%.12Lg", v);
            return buf;
        }
        // Peel levels until the remainder is printable.
        LogNum f = *this;
        std::size_t k = 0;
        while (!std::isfinite(f.approx())) {
            f = f.inner();
            ++k;
        }
        std::snprintf(buf, sizeof buf, "exp^%zu(%.12Lg)", k, f.approx());
        return buf;
    }

private:
    LogNum without_outer_offset() const
    {
        LogNum r = *this;
        r.exact_.reset();
        r.d_[0] = 0;
        return r;
    }

    LogNum plus_outer(real c) const
    {
        if (c == 0) return *this;
        if (is_plain()) return plain_sum(*this, real_value(c), 1);
        LogNum r = *this;
        r.exact_.reset();
        r.d_[0] += c;
        return r;
    }

    std::vector<real> d_;
    real base_ = 0;
    std::optional<std::int64_t> exact_;

    void add_offset(real c)
    {
        if (exact_ && std::nearbyint(c) == c) {
            std::int64_t s;
            if (!__builtin_add_overflow(*exact_, static_cast<std::int64_t>(c), &s)) {
                *this = LogNum(s);
                return;
            }
        }
        exact_.reset();
        d_[0] += c;
    }

    void try_exact()
    {
        if (levels() == 0 && d_[0] == 0 && std::nearbyint(base_) == base_ && base_ >= -9.2e18L &&
            base_ <= 9.2e18L) {
            exact_ = static_cast<std::int64_t>(base_);
        } else {
            exact_.reset();
        }
    }

    /// Plain a + sign*b. A summand much smaller than the other's base goes into the
    /// offset so that a large base survives exactly.
    static LogNum plain_sum(const LogNum& a, const LogNum& b, int sign)
    {
        LogNum r;
        r.exact_.reset();
        const real bb = sign * b.base_;
        const real bd = sign * b.d_[0];
        const real big = std::fmax(std::fabs(a.base_), std::fabs(bb));
        if (std::fabs(bb) < big * 0x1p-40L) {
            r.base_ = a.base_;
            r.d_ = {a.d_[0] + bd + bb};
        } else if (std::fabs(a.base_) < big * 0x1p-40L) {
            r.base_ = bb;
            r.d_ = {bd + a.d_[0] + a.base_};
        } else {
            r.base_ = a.base_ + bb;
            r.d_ = {a.d_[0] + bd};
        }
        r.try_exact();
        return r;
    }

    static std::string hexfloat(real v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%La", v);
        return buf;
    }

    static real parse_real(std::string_view s)
    {
        const std::string tmp(s);
        char* end = nullptr;
        const real v = std::strtold(tmp.c_str(), &end);
        if (end != tmp.c_str() + tmp.size()) {
            throw Error(Errc::ParseError, "bad real '" + tmp + "'");
        }
        return v;
    }
};

} // namespace cocycle
