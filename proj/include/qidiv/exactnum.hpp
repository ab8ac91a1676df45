#pragma once

#include "params.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace qidiv {

struct RationalPower {
    unsigned l = 0;
    std::uint64_t num = 0, den = 1;
    bool operator==(const RationalPower&) const = default;
};

struct IntegerPower {
    unsigned l = 0;
    std::uint64_t alpha = 0;
    bool operator==(const IntegerPower&) const = default;
};

// 2 c^j = n with n odd
struct OddDoubleWitness {
    unsigned j = 0;
    std::uint64_t n = 0;
    bool operator==(const OddDoubleWitness&) const = default;
};

struct CProfile {
    std::optional<RationalPower> smallest_rational_power;
    std::optional<IntegerPower> smallest_integer_power;
    std::optional<OddDoubleWitness> odd_double_witness;
    std::optional<unsigned> power_equals_two;
};

inline CProfile profile(const CBase& c, unsigned j_max = 64) {
    (void)j_max;  // closed form for every variant; Generic has no rational power by assertion
    CProfile out;
    auto fill = [&](std::uint64_t a, std::uint64_t b, unsigned l) {
        out.smallest_rational_power = RationalPower{l, a, b};
        if (b == 1) out.smallest_integer_power = IntegerPower{l, a};
        if (b == 2) out.odd_double_witness = OddDoubleWitness{l, a};
        if (a == 2 && b == 1) out.power_equals_two = l;
    };
    if (auto* rc = std::get_if<RationalC>(&c)) fill(rc->num, rc->den, 1);
    else if (auto* rr = std::get_if<RationalRootC>(&c)) fill(rr->num, rr->den, rr->root);
    return out;
}

class OverflowGuard : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

inline constexpr long long default_exponent_bound = 1LL << 20;

// sign * m * c^e, canonical per canonical_position
struct AtomPosition {
    int sign = 1;
    long long e = 0;
    std::uint64_t m = 1;
    bool operator==(const AtomPosition&) const = default;
};

struct AtomPositionHash {
    std::size_t operator()(const AtomPosition& a) const noexcept {
        std::uint64_t h = a.m * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(a.e) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(a.sign + 2) * 0xBF58476D1CE4E5B9ULL;
        return static_cast<std::size_t>(h);
    }
};

namespace detail {

// (a, b, step) with c^step = a/b; nullopt for Generic.
inline std::optional<RationalPower> base_power(const CBase& c) { return profile(c).smallest_rational_power; }

inline constexpr std::uint64_t canonical_m_limit = std::uint64_t{1} << 62;

// Largest exponent form: absorb factors of a into the exponent while m stays integral.
inline void to_max_exponent(std::uint64_t a, std::uint64_t b, unsigned step, long long& e, std::uint64_t& m) {
    while (m % a == 0) {
        m = m / a * b;  // m/a*b < m since b < a
        e += step;
    }
}

}  // namespace detail

// Representation of m*c^e whose exponent is the one closest to 0 among representations with
// integral m (ties toward the larger exponent), subject to m < 2^62.  Unique per real value.
inline AtomPosition canonical_position(const CBase& c, long long e, std::uint64_t m, int sign = 1,
                                       long long e_bound = default_exponent_bound) {
    if (m == 0) throw std::invalid_argument("atom multiplier must be positive");
    if (e > e_bound || e < -e_bound) throw OverflowGuard("exponent outside configured bound");
    auto bp = detail::base_power(c);
    if (!bp) return AtomPosition{sign, e, m};
    const std::uint64_t a = bp->num, b = bp->den;
    const long long step = bp->l;
    detail::to_max_exponent(a, b, bp->l, e, m);
    while (2 * e > step && m % b == 0) {
        std::uint64_t mb = m / b;
        if (mb > (detail::canonical_m_limit - 1) / a) break;
        m = mb * a;
        e -= step;
    }
    if (e > e_bound || e < -e_bound) throw OverflowGuard("canonical exponent outside configured bound");
    return AtomPosition{sign, e, m};
}

// c^j as an exact rational when it is one.
inline std::optional<mpq_class> rational_c_power(const CBase& c, long long j) {
    if (j == 0) return mpq_class(1);
    auto bp = detail::base_power(c);
    if (!bp || j % static_cast<long long>(bp->l) != 0) return std::nullopt;
    long long t = j / static_cast<long long>(bp->l);
    unsigned long ut = static_cast<unsigned long>(t < 0 ? -t : t);
    mpz_class a = detail::from_u64(bp->num), b = detail::from_u64(bp->den), an, bn;
    mpz_pow_ui(an.get_mpz_t(), a.get_mpz_t(), ut);
    mpz_pow_ui(bn.get_mpz_t(), b.get_mpz_t(), ut);
    mpq_class out = t >= 0 ? mpq_class(an, bn) : mpq_class(bn, an);
    out.canonicalize();
    return out;
}

inline bool is_natural(const mpq_class& x) { return x.get_den() == 1 && sgn(x) > 0; }

// Exact value of a position when c^e is rational.
inline std::optional<mpq_class> exact_value(const CBase& c, const AtomPosition& a) {
    auto pw = rational_c_power(c, a.e);
    if (!pw) return std::nullopt;
    mpq_class v = *pw * mpq_class(detail::from_u64(a.m));
    return a.sign < 0 ? mpq_class(-v) : v;
}

inline long double c_pow(const CBase& c, long long e) {
    if (auto pw = rational_c_power(c, e); pw && mpz_sizeinbase(pw->get_num().get_mpz_t(), 2) < 16000 &&
                                          mpz_sizeinbase(pw->get_den().get_mpz_t(), 2) < 16000) {
        long num_exp = 0, den_exp = 0;
        long double n = mpz_get_d_2exp(&num_exp, pw->get_num().get_mpz_t());
        long double d = mpz_get_d_2exp(&den_exp, pw->get_den().get_mpz_t());
        return std::ldexp(n / d, static_cast<int>(num_exp - den_exp));
    }
    return std::exp(static_cast<long double>(e) * log_c(c));
}

inline long double position_value(const CBase& c, const AtomPosition& a) {
    return static_cast<long double>(a.sign) * static_cast<long double>(a.m) * c_pow(c, a.e);
}

inline std::string format_position(const AtomPosition& a) {
    return std::string(a.sign < 0 ? "-" : "") + std::to_string(a.m) + "*c^" + std::to_string(a.e);
}

// Exact real-value comparison for Rational/RationalRoot c (cross-multiplication), floating otherwise.
inline bool same_value(const CBase& c, const AtomPosition& x, const AtomPosition& y) {
    if (x.sign != y.sign) return false;
    auto bp = detail::base_power(c);
    if (!bp) return x.e == y.e && x.m == y.m;
    long long de = x.e - y.e;
    if (de % static_cast<long long>(bp->l) != 0) return false;
    auto pw = rational_c_power(c, de);
    return *pw * mpq_class(detail::from_u64(x.m)) == mpq_class(detail::from_u64(y.m));
}

}  // namespace qidiv
