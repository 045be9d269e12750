#ifndef DIRRHO_RATIONAL_HPP
#define DIRRHO_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dirrho {

/// Exact rational number with 64-bit numerator/denominator, always stored
/// reduced with a positive denominator. Intermediate arithmetic runs in
/// 128 bits; a result that does not fit back into 64 bits throws.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) { *this = reduce(n, d); }

    static Rational reduce(__int128 n, __int128 d) {
        if (d == 0) throw std::domain_error("rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n;
        __int128 b = d;
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        if (a != 0) { n /= a; d /= a; }
        constexpr __int128 lo = INT64_MIN, hi = INT64_MAX;
        if (n < lo || n > hi || d > hi)
            throw std::overflow_error("rational does not fit in 64 bits");
        Rational r;
        r.num = static_cast<std::int64_t>(n);
        r.den = static_cast<std::int64_t>(d);
        return r;
    }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    Rational operator+(const Rational& o) const {
        return reduce(static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den,
                      static_cast<__int128>(den) * o.den);
    }
    Rational operator-(const Rational& o) const {
        return reduce(static_cast<__int128>(num) * o.den - static_cast<__int128>(o.num) * den,
                      static_cast<__int128>(den) * o.den);
    }
    Rational operator*(const Rational& o) const {
        return reduce(static_cast<__int128>(num) * o.num, static_cast<__int128>(den) * o.den);
    }
    Rational operator-() const { Rational r; r.num = -num; r.den = den; return r; }

    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }

    std::string to_string() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

} // namespace dirrho

#endif
