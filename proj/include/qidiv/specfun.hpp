#pragma once

#include <gmpxx.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qidiv {

using HighFloat = boost::multiprecision::cpp_bin_float_50;

struct SpecFunParams {
    unsigned alpha = 2;
    unsigned gamma = 1;
    double tol = 1e-14;

    void check() const {
        if (alpha < 2) throw std::domain_error("alpha must be >= 2");
        if (gamma < 1) throw std::domain_error("gamma must be >= 1");
        if (!(tol > 0 && tol <= 1e-8)) throw std::domain_error("tol must lie in (0, 1e-8]");
    }
};

// Value of F_alpha together with its log-derivative x F'(x) / F(x) and the term count.
template <class T>
struct FEval {
    T value = 0;
    T log_slope = 0;
    int terms = 0;
};

namespace detail {

template <class T>
T lowest_log() {
    using std::log;
    return log(std::numeric_limits<T>::min());
}

}  // namespace detail

// F_alpha(x) = sum_{n>=0} alpha^{-n} x^{2 alpha^n}, summed in log space.
template <class T>
FEval<T> F_eval(unsigned alpha, const T& x) {
    using std::exp;
    using std::log;
    if (alpha < 2) throw std::domain_error("alpha must be >= 2");
    if (!(x >= 0 && x <= 1)) throw std::domain_error("F_alpha needs x in [0, 1]");
    FEval<T> out;
    if (x == 0) return out;
    const T a = T(alpha);
    if (x == 1) {
        out.value = a / (a - 1);
        out.log_slope = std::numeric_limits<T>::infinity();
        return out;
    }
    const T lx = log(x), la = log(a), floor_log = detail::lowest_log<T>();
    const T eps = std::numeric_limits<T>::epsilon();
    T power = 2;  // 2 alpha^n
    T weighted = 0;
    for (int n = 0; n < 4000; ++n) {
        T lt = power * lx - T(n) * la;
        if (lt < floor_log) break;
        T term = exp(lt);
        out.value += term;
        weighted += power * term;
        ++out.terms;
        // consecutive terms shrink by at least 1/alpha, so the tail is below `term`
        if (term < out.value * eps / 16) break;
        power *= a;
    }
    out.log_slope = out.value > 0 ? weighted / out.value : T(0);
    return out;
}

inline double F(unsigned alpha, double x) {
    return static_cast<double>(F_eval<long double>(alpha, static_cast<long double>(x)).value);
}

// h with alpha^{-gamma} F(x) = F(h), by bisection on [0, x].
template <class T>
T h_solve(unsigned alpha, unsigned gamma, const T& x, const T& tol) {
    using std::pow;
    if (alpha < 2 || gamma < 1) throw std::domain_error("need alpha >= 2, gamma >= 1");
    if (!(x > 0 && x <= 1)) throw std::domain_error("h needs x in (0, 1]");
    const T target = F_eval<T>(alpha, x).value / pow(T(alpha), T(gamma));
    T lo = 0, hi = x;
    while (hi - lo > tol) {
        T mid = (lo + hi) / 2;
        if (mid <= lo || mid >= hi) break;
        if (F_eval<T>(alpha, mid).value < target) lo = mid;
        else hi = mid;
    }
    return (lo + hi) / 2;
}

inline double h(unsigned alpha, unsigned gamma, double x, double tol = 1e-14) {
    SpecFunParams{alpha, gamma, tol}.check();
    return static_cast<double>(h_solve<long double>(alpha, gamma, static_cast<long double>(x), tol));
}

inline double f(unsigned alpha, unsigned gamma, double x, double tol = 1e-14) { return h(alpha, gamma, x, tol) / x; }

namespace detail {

inline long double mpz_top_bits(const mpz_class& z, long& exp2) {
    std::size_t bits = mpz_sizeinbase(z.get_mpz_t(), 2);
    mpz_class top = abs(z);
    long shift = bits > 64 ? static_cast<long>(bits - 64) : 0;
    if (shift > 0) mpz_tdiv_q_2exp(top.get_mpz_t(), top.get_mpz_t(), shift);
    unsigned long long u = 0;
    mpz_export(&u, nullptr, -1, sizeof u, 0, 0, top.get_mpz_t());
    exp2 = shift;
    long double v = static_cast<long double>(u);
    return sgn(z) < 0 ? -v : v;
}

}  // namespace detail

// Correctly scaled long double value (relative error below 2^-62).
inline long double to_long_double(const mpq_class& x) {
    if (sgn(x) == 0) return 0;
    long en = 0, ed = 0;
    long double n = detail::mpz_top_bits(x.get_num(), en);
    long double d = detail::mpz_top_bits(x.get_den(), ed);
    return std::ldexp(n / d, static_cast<int>(en - ed));
}

// Natural log of a positive rational without overflow.
inline long double log_abs(const mpq_class& x) {
    long en = 0, ed = 0;
    long double n = std::fabs(detail::mpz_top_bits(x.get_num(), en));
    long double d = detail::mpz_top_bits(x.get_den(), ed);
    return std::log(n) - std::log(d) + static_cast<long double>(en - ed) * std::log(2.0L);
}

inline HighFloat to_high(const mpq_class& x) { return HighFloat(x.get_num().get_str()) / HighFloat(x.get_den().get_str()); }

enum class HComparison { AtLeast, Below, Undecided };

struct HDecision {
    HComparison outcome = HComparison::Undecided;
    double h_value = 0;          // h_{alpha,beta}(q^{alpha^beta}), possibly 0 on underflow
    double log_h_value = 0;      // natural log of the same
    double margin = 0;           // alpha^{-beta} F(x0) - F(y), in the precision that decided
    double error_bound = 0;
    bool high_precision = false;
};

namespace detail {

template <class T>
bool decide_h(unsigned alpha, unsigned beta, const T& eps, T lq, T ly, HDecision& out) {
    using std::exp;
    using std::fabs;
    using std::pow;
    const T E = pow(T(alpha), T(beta));  // exact for the sizes in play
    T lx0 = E * lq;
    T x0 = lx0 < lowest_log<T>() ? T(0) : exp(lx0);
    T yv = exp(ly);
    auto Fx = F_eval<T>(alpha, x0);
    auto Fy = F_eval<T>(alpha, yv);
    T lhs = Fx.value / pow(T(alpha), T(beta));
    T diff = lhs - Fy.value;
    T rel_x0 = (fabs(lx0) + 4) * 8 * eps;
    T rel_y = (fabs(ly) + 4) * 8 * eps;
    T err_lhs = lhs * (Fx.log_slope * rel_x0 + T(Fx.terms + 8) * 4 * eps);
    if (x0 == 0) err_lhs = 2 * pow(T(alpha), -T(beta)) * std::numeric_limits<T>::min();
    T err_rhs = Fy.value * (Fy.log_slope * rel_y + T(Fy.terms + 8) * 4 * eps);
    T bound = 4 * (err_lhs + err_rhs);
    out.margin = static_cast<double>(diff);
    out.error_bound = static_cast<double>(bound);
    if (diff > bound) out.outcome = HComparison::AtLeast;
    else if (-diff > bound) out.outcome = HComparison::Below;
    else out.outcome = HComparison::Undecided;
    return out.outcome != HComparison::Undecided;
}

}  // namespace detail

// Decide h_{alpha,beta}(q^{alpha^beta}) >= y for rationals 0 < q < 1, 0 < y < 1 via
// the equivalent alpha^{-beta} F(q^{alpha^beta}) >= F(y), with rounding accounted for.
inline HDecision compare_h(unsigned alpha, unsigned beta, const mpq_class& q, const mpq_class& y,
                           double tol = 1e-14) {
    if (!(sgn(q) > 0 && q < 1 && sgn(y) > 0 && y < 1)) throw std::domain_error("compare_h needs q, y in (0, 1)");
    HDecision out;
    const long double lq = log_abs(q), ly = log_abs(y);
    const long double E = std::pow(static_cast<long double>(alpha), static_cast<long double>(beta));
    const long double lx0 = E * lq;
    out.log_h_value = static_cast<double>(lx0);
    if (lx0 > -11000) {
        long double x0 = std::exp(lx0);
        long double hv = h_solve<long double>(alpha, beta, x0, std::min<long double>(tol, x0 * 1e-12L));
        out.h_value = static_cast<double>(hv);
        if (hv > 0) out.log_h_value = static_cast<double>(std::log(hv));
    }
    if (detail::decide_h<long double>(alpha, beta, std::numeric_limits<long double>::epsilon(), lq, ly, out))
        return out;
    using boost::multiprecision::log;
    HighFloat hq = log(to_high(q)), hy = log(to_high(y));
    out.high_precision = true;
    detail::decide_h<HighFloat>(alpha, beta, std::numeric_limits<HighFloat>::epsilon(), hq, hy, out);
    return out;
}

}  // namespace qidiv
