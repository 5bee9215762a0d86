#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "cfdr/errors.hpp"

namespace cfdr {

/// Non-negative rational with exact arithmetic. Comparisons go through
/// 128-bit intermediates, so anything at desk scale is overflow-safe.
struct URational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    constexpr URational() = default;
    constexpr URational(std::uint64_t n) : num(n), den(1) {}
    URational(std::uint64_t n, std::uint64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw Error(ErrorCode::SchemaError, "rational denominator must be non-zero");
        std::uint64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
        if (num == 0) den = 1;
    }

    bool operator==(const URational& o) const { return num == o.num && den == o.den; }

    bool operator<(const URational& o) const {
        using u128 = unsigned __int128;
        return static_cast<u128>(num) * o.den < static_cast<u128>(o.num) * den;
    }
    bool operator<=(const URational& o) const { return !(o < *this); }
    bool operator>(const URational& o) const { return o < *this; }
    bool operator>=(const URational& o) const { return !(*this < o); }

    bool is_zero() const { return num == 0; }

    /// Exact difference; caller guarantees *this >= o.
    URational minus(const URational& o) const {
        using u128 = unsigned __int128;
        u128 lhs = static_cast<u128>(num) * o.den;
        u128 rhs = static_cast<u128>(o.num) * den;
        if (lhs < rhs) throw Error(ErrorCode::SchemaError, "rational subtraction would go negative");
        u128 d = static_cast<u128>(den) * o.den;
        u128 n = lhs - rhs;
        // reduce before narrowing
        u128 g = gcd128(n, d);
        n /= g;
        d /= g;
        if (n > 0xffffffffffffffffULL || d > 0xffffffffffffffffULL)
            throw Error(ErrorCode::SchemaError, "rational overflow");
        return URational(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d));
    }

    /// ceil(k * this) as an integer.
    std::uint64_t scaled_ceil(std::uint64_t k) const {
        using u128 = unsigned __int128;
        u128 n = static_cast<u128>(num) * k;
        return static_cast<std::uint64_t>((n + den - 1) / den);
    }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    /// Accepts "123" or "123/456". Rejects anything else (floats included);
    /// exactness is the point.
    static URational parse(std::string_view s) {
        auto digits = [](std::string_view t) {
            if (t.empty()) return false;
            for (char c : t)
                if (c < '0' || c > '9') return false;
            return true;
        };
        auto slash = s.find('/');
        try {
            if (slash == std::string_view::npos) {
                if (!digits(s)) throw Error(ErrorCode::SchemaError, "not an unsigned integer");
                return URational(std::stoull(std::string(s)));
            }
            auto n = s.substr(0, slash), d = s.substr(slash + 1);
            if (!digits(n) || !digits(d)) throw Error(ErrorCode::SchemaError, "not a rational");
            return URational(std::stoull(std::string(n)), std::stoull(std::string(d)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::SchemaError, "invalid rational literal: '" + std::string(s) + "'");
        }
    }

private:
    static unsigned __int128 gcd128(unsigned __int128 a, unsigned __int128 b) {
        while (b != 0) {
            auto t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }
};

}  // namespace cfdr
