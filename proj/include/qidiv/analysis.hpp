#pragma once

#include "exactnum.hpp"
#include "params.hpp"
#include "specfun.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qidiv {

using cplx = std::complex<double>;

struct CFValue {
    cplx value{1, 0};
    double error_bound = 0;
    int truncation_n = 0;
};

struct CFTrace {
    std::vector<double> z_grid;
    std::vector<cplx> values;
    std::vector<double> error_bound;
    int truncation_n = 0;
};

namespace detail {

struct CFConstants {
    long double p, q, r, ck, c;
};

inline CFConstants cf_constants(const ModelParams& prm) {
    return {to_long_double(prm.p), to_long_double(prm.q), to_long_double(prm.r), c_pow(prm.c, -prm.k),
            c_value(prm.c)};
}

inline std::complex<long double> rho_hat(const CFConstants& k, long double z) {
    using C = std::complex<long double>;
    C num = k.p + k.r * std::polar(1.0L, k.ck * z);
    C den = 1.0L - k.q * std::polar(1.0L, z);
    return num / den;
}

}  // namespace detail

inline cplx rho_cf(const ModelParams& prm, double z) {
    auto v = detail::rho_hat(detail::cf_constants(prm), z);
    return {static_cast<double>(v.real()), static_cast<double>(v.imag())};
}

// Truncated product over n = 0..N of rho_hat(c^{-n} z); N is the first index whose tail
// bound exp(S) - 1, S = (r c^{-k} + q)|z| c^{-N-1} / ((1 - 1/c)(1 - q)), is below tol / 2.
inline CFValue mu_cf(const ModelParams& prm, double z, double tol = 1e-12) {
    if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
    auto k = detail::cf_constants(prm);
    CFValue out;
    if (z == 0) return out;
    const long double az = std::fabs(static_cast<long double>(z));
    const long double base = (k.r * k.ck + k.q) * az / ((1 - 1 / k.c) * (1 - k.q));
    int N = 0;
    long double S = base / k.c;
    while (2 * std::expm1(S) >= tol && N < 100000) {
        ++N;
        S /= k.c;
    }
    std::complex<long double> prod = 1;
    long double zn = z;
    for (int n = 0; n <= N; ++n) {
        prod *= detail::rho_hat(k, zn);
        zn /= k.c;
    }
    out.value = {static_cast<double>(prod.real()), static_cast<double>(prod.imag())};
    out.truncation_n = N;
    out.error_bound = static_cast<double>(std::expm1(S) + (N + 4) * 8 * std::numeric_limits<long double>::epsilon()) +
                      2 * std::numeric_limits<double>::epsilon();
    return out;
}

inline CFTrace mu_cf_trace(const ModelParams& prm, const std::vector<double>& zs, double tol = 1e-12) {
    CFTrace t;
    t.z_grid = zs;
    for (double z : zs) {
        auto v = mu_cf(prm, z, tol);
        t.values.push_back(v.value);
        t.error_bound.push_back(v.error_bound);
        t.truncation_n = std::max(t.truncation_n, v.truncation_n);
    }
    return t;
}

inline CFTrace rho_cf_trace(const ModelParams& prm, const std::vector<double>& zs) {
    CFTrace t;
    t.z_grid = zs;
    for (double z : zs) {
        t.values.push_back(rho_cf(prm, z));
        t.error_bound.push_back(4 * std::numeric_limits<double>::epsilon());
    }
    return t;
}

// Weak limit as k grows: product of (1 - q) / (1 - q e^{i c^{-n} z}).
inline CFValue limit_cf(const ModelParams& prm, double z, double tol = 1e-12) {
    ModelParams sharp = prm;
    sharp.p = 1 - prm.q;
    sharp.r = 0;
    sharp.k = 0;
    return mu_cf(sharp, z, tol);
}

struct SymValue {
    double value = 1;
    double error_bound = 0;
};

// |CF|^2 of the factor or of the stationary law.
inline SymValue sym_cf(const ModelParams& prm, double z, double tol, Target target) {
    SymValue out;
    if (target == Target::Rho) {
        out.value = std::norm(rho_cf(prm, z));
        out.error_bound = 8 * std::numeric_limits<double>::epsilon();
        return out;
    }
    auto v = mu_cf(prm, z, tol);
    out.value = std::norm(v.value);
    out.error_bound = 2 * v.error_bound + v.error_bound * v.error_bound;
    return out;
}

// Entropy of the factor: atoms p q^j at j and r q^m at m + c^{-k}, merged when c^{-k} is a
// natural number d (then position j >= d carries q^{j-d}(p q^d + r)). Each run of atoms
// w q^i, i < len, contributes -w log w S0 - w log q S1 with S0, S1 its geometric sums.
inline long double entropy_rho(const ModelParams& prm) {
    const long double p = to_long_double(prm.p), q = to_long_double(prm.q), r = to_long_double(prm.r);
    const long double lq = sgn(prm.q) > 0 ? log_abs(prm.q) : 0;
    auto run = [&](long double w, long double len) -> long double {
        if (w <= 0) return 0;
        if (q == 0) return -w * std::log(w);
        long double qlen = std::isinf(len) ? 0.0L : std::exp(len * lq);
        long double s0 = (1 - qlen) / (1 - q);
        long double s1 = std::isinf(len) ? q / ((1 - q) * (1 - q))
                                         : (q - len * std::exp((len - 1) * lq) * q + (len - 1) * qlen * q) /
                                               ((1 - q) * (1 - q));
        return -w * std::log(w) * s0 - w * lq * s1;
    };
    const long double inf = std::numeric_limits<long double>::infinity();
    auto shift = rational_c_power(prm.c, -prm.k);
    if (shift && is_natural(*shift) && sgn(prm.p) > 0 && sgn(prm.r) > 0) {
        long double d = to_long_double(*shift);
        long double merged = p * std::exp(d * lq) + r;
        if (q == 0) merged = r;  // position d only receives r when q = 0 (p q^d vanishes for d >= 1)
        return run(p, d) + run(merged, inf);
    }
    return run(p, inf) + run(r, inf);
}

// Entropy lost to merging when c^{-k} = d is natural: phi(a) + phi(b) - phi(a + b) over the
// pairs a = p q^j, b = r q^{j-d}, j >= d, summed in closed form (a / b = p q^d / r is constant).
// Zero when nothing merges. Accurate relative to itself, unlike a difference of two entropies.
inline long double entropy_merge_deficit(const ModelParams& prm) {
    auto shift = rational_c_power(prm.c, -prm.k);
    if (!(shift && is_natural(*shift) && sgn(prm.p) > 0 && sgn(prm.q) > 0 && sgn(prm.r) > 0)) return 0;
    const long double p = to_long_double(prm.p), q = to_long_double(prm.q), r = to_long_double(prm.r);
    const long double a = p * std::exp(to_long_double(*shift) * log_abs(prm.q));
    return (a * std::log1p(r / a) + r * std::log1p(a / r)) / (1 - q);
}

enum class ContinuityVerdict { Dirac, ContinuousSingular, Undetermined };

inline const char* to_string(ContinuityVerdict v) {
    switch (v) {
        case ContinuityVerdict::Dirac: return "Dirac";
        case ContinuityVerdict::ContinuousSingular: return "ContinuousSingular";
        case ContinuityVerdict::Undetermined: return "Undetermined";
    }
    return "?";
}

struct ContinuityAssessment {
    ContinuityVerdict verdict = ContinuityVerdict::Undetermined;
    double entropy = 0;
    double dim_bound = 1;
    double sym_dim_bound = 1;
    double singularity_margin = 0;  // log c - log 3 / (1 - q)
};

inline ContinuityAssessment assess_continuity(const ModelParams& prm) {
    ContinuityAssessment a;
    const long double H = entropy_rho(prm), lc = log_c(prm.c), q = to_long_double(prm.q);
    a.entropy = static_cast<double>(H);
    a.dim_bound = static_cast<double>(std::min<long double>(1, H / lc));
    a.sym_dim_bound = static_cast<double>(std::min<long double>(1, 2 * H / lc));
    a.singularity_margin = static_cast<double>(lc - std::log(3.0L) / (1 - q));
    if (prm.r == 1) a.verdict = ContinuityVerdict::Dirac;
    else if (H / lc < 1 || a.singularity_margin > 0) a.verdict = ContinuityVerdict::ContinuousSingular;
    return a;
}

}  // namespace qidiv
