#pragma once

#include "exactnum.hpp"
#include "params.hpp"
#include "specfun.hpp"

#include <gmpxx.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qidiv {

struct NamedValue {
    std::string name;
    std::string value;
    bool operator==(const NamedValue&) const = default;
};

struct Verdict {
    DivisibilityClass cls = DivisibilityClass::ID0;
    std::string rule;
    std::vector<NamedValue> values;
    bool swapped_used = false;
};

struct ClassificationReport {
    ModelParams params;
    Verdict rho, mu, rho_sym, mu_sym;
    bool swapped_used = false;
};

class BoundaryUndecided : public std::runtime_error {
public:
    BoundaryUndecided(const std::string& what, HDecision d) : std::runtime_error(what), decision(d) {}
    HDecision decision;
};

namespace detail {

inline std::string fmt(const mpq_class& x) { return format_rational(x); }

inline std::string fmt_ld(long double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17Lg", v);
    return buf;
}

inline mpq_class qpow(const mpq_class& x, unsigned long e) {
    mpz_class n, d;
    mpz_pow_ui(n.get_mpz_t(), x.get_num_mpz_t(), e);
    mpz_pow_ui(d.get_mpz_t(), x.get_den_mpz_t(), e);
    return mpq_class(n, d);  // already in lowest terms
}

inline std::optional<Verdict> coarse(const ModelParams& prm) {
    if (sgn(prm.p) == 0 || sgn(prm.r) == 0)
        return Verdict{DivisibilityClass::ID, "p=0 or r=0: nonnegative Levy measure", {}, false};
    if (prm.p == prm.r)
        return Verdict{DivisibilityClass::ID00, "p=r>0: characteristic function vanishes at c^k pi", {}, false};
    if (prm.p < prm.r)
        return Verdict{DivisibilityClass::ID0, "0<p<r: quasi-Levy measure has a negative part on (-inf,0)",
                       {{"p/r", fmt(prm.p / prm.r)}}, false};
    return std::nullopt;
}

// q^s >= (s/2) rho^2 with s possibly astronomically large.
inline bool power_inequality(const mpq_class& q, const mpz_class& s, const mpq_class& rho) {
    if (sgn(q) == 0) return false;
    if (s <= 20000) {
        unsigned long si = s.get_ui();
        return qpow(q, si) * 2 >= mpq_class(s) * rho * rho;
    }
    // exact powers get too large; compare logarithms and refuse to guess near equality
    long double lhs = static_cast<long double>(s.get_d()) * log_abs(q);
    long double rhs = std::log(static_cast<long double>(s.get_d()) / 2) + 2 * log_abs(rho);
    if (std::fabs(lhs - rhs) < 1e-6L * (1 + std::fabs(lhs)))
        throw std::runtime_error("power comparison too close to call in floating point");
    return lhs >= rhs;
}

}  // namespace detail

inline Verdict classify_rho(const ModelParams& prm) {
    if (auto v = detail::coarse(prm)) return *v;
    const mpq_class rho = prm.r / prm.p;
    Verdict v;
    auto ck = rational_c_power(prm.c, -prm.k);
    if (!ck || !is_natural(mpq_class(*ck * 2))) {
        v.cls = DivisibilityClass::ID0;
        v.rule = "rho 0<r<p: 2c^{-k} not a natural number, atom at 2c^{-k} is negative";
        v.values = {{"r/p", detail::fmt(rho)}};
        return v;
    }
    const mpz_class s = mpq_class(*ck * 2).get_num();
    v.values = {{"s=2c^{-k}", s.get_str()}, {"q", detail::fmt(prm.q)}, {"r/p", detail::fmt(rho)}};
    bool ok;
    if (s == 1) {
        ok = prm.q >= rho * rho;
        v.rule = "rho 0<r<p: c^k=2, ID iff q >= (r/p)^2";
        v.values.push_back({"(r/p)^2", detail::fmt(rho * rho)});
    } else if (s == 2) {
        ok = prm.q >= rho;
        v.rule = "rho 0<r<p: k=0, ID iff q >= r/p";
    } else {
        ok = detail::power_inequality(prm.q, s, rho);
        v.rule = "rho 0<r<p: s=2c^{-k}>=3, ID iff q^s >= (s/2)(r/p)^2";
        v.values.push_back({"(s/2)(r/p)^2", detail::fmt(mpq_class(s) * rho * rho / 2)});
    }
    v.cls = ok ? DivisibilityClass::ID : DivisibilityClass::ID0;
    return v;
}

// First m in 1..149 violating sum_{s=0}^{t(m)} a_{3^{s+1} 2^{-s} m} >= (2m)^{-1} rho^{2m},
// a_i = (q^i - (-rho)^i) / i; nullopt when all 149 hold.
inline std::optional<int> first_failing_149(const mpq_class& q, const mpq_class& rho) {
    std::map<unsigned long, mpq_class> qc, rc;
    auto cached = [](std::map<unsigned long, mpq_class>& cache, const mpq_class& x, unsigned long e) -> const mpq_class& {
        auto it = cache.find(e);
        if (it == cache.end()) it = cache.emplace(e, detail::qpow(x, e)).first;
        return it->second;
    };
    for (int m = 1; m <= 149; ++m) {
        int t = 0;
        while (((m >> t) & 1) == 0) ++t;
        mpq_class lhs = 0;
        unsigned long three = 3, two = 1;
        for (int s = 0; s <= t; ++s) {
            unsigned long i = three * static_cast<unsigned long>(m) / two;
            const mpq_class& qi = cached(qc, q, i);
            const mpq_class& ri = cached(rc, rho, i);
            mpq_class a = (i % 2 == 0) ? mpq_class(qi - ri) : mpq_class(qi + ri);
            lhs += a / static_cast<unsigned long>(i);
            three *= 3;
            two *= 2;
        }
        mpq_class rhs = cached(rc, rho, 2UL * m) / (2UL * static_cast<unsigned long>(m));
        if (lhs < rhs) return m;
    }
    return std::nullopt;
}

inline Verdict classify_mu(const ModelParams& prm) {
    if (auto v = detail::coarse(prm)) return *v;
    const mpq_class rho = prm.r / prm.p;
    const mpq_class pq = prm.p * prm.q;
    const CProfile prof = profile(prm.c);
    Verdict v;
    v.values = {{"r", detail::fmt(prm.r)}, {"pq", detail::fmt(pq)}};
    if (prm.k >= 0) {
        if (prm.r <= pq) {
            v.cls = DivisibilityClass::ID;
            v.rule = prm.k == 0 ? "mu k=0: r <= pq" : "mu k>0: r <= pq";
            return v;
        }
        if (prm.k == 0) {
            v.cls = DivisibilityClass::ID0;
            v.rule = "mu k=0: r > pq";
            return v;
        }
        v.values.push_back({"r^2", detail::fmt(prm.r * prm.r)});
        v.values.push_back({"p^2 q", detail::fmt(prm.p * pq)});
        if (prof.power_equals_two && static_cast<int>(*prof.power_equals_two) <= prm.k) {
            v.values.push_back({"l (c^l=2)", std::to_string(*prof.power_equals_two)});
            bool ok = prm.r * prm.r <= prm.p * pq;
            v.cls = ok ? DivisibilityClass::ID : DivisibilityClass::ID0;
            v.rule = "mu k>0: r > pq; c^l=2 with l<=k, ID iff r^2 <= p^2 q";
            return v;
        }
        v.cls = DivisibilityClass::ID0;
        v.rule = "mu k>0: r > pq and no l<=k with c^l=2";
        return v;
    }

    const int ak = -prm.k;
    v.values = {{"q", detail::fmt(prm.q)}, {"r/p", detail::fmt(rho)}};
    if (prof.smallest_integer_power) {
        const unsigned l = prof.smallest_integer_power->l;
        const auto alpha = prof.smallest_integer_power->alpha;
        const unsigned beta = static_cast<unsigned>((ak + static_cast<int>(l) - 1) / static_cast<int>(l));
        v.values.push_back({"alpha=c^l", std::to_string(alpha)});
        v.values.push_back({"beta=ceil(|k|/l)", std::to_string(beta)});
        v.rule = "mu k<0: c^l natural, ID iff q>0 and h_{alpha,beta}(q^{alpha^beta}) >= r/p";
        if (sgn(prm.q) == 0) {
            v.cls = DivisibilityClass::ID0;
            v.rule = "mu k<0: c^l natural and q=0";
            return v;
        }
        if (alpha > 1000000) throw std::runtime_error("alpha too large for the h-criterion");
        HDecision d = compare_h(static_cast<unsigned>(alpha), beta, prm.q, rho);
        v.values.push_back({"h_{alpha,beta}(q^{alpha^beta})", detail::fmt_ld(d.h_value)});
        v.values.push_back({"margin alpha^{-beta}F(q^{alpha^beta})-F(r/p)", detail::fmt_ld(d.margin)});
        if (d.outcome == HComparison::Undecided)
            throw BoundaryUndecided("h_{alpha,beta}(q^{alpha^beta}) indistinguishable from r/p", d);
        v.cls = d.outcome == HComparison::AtLeast ? DivisibilityClass::ID : DivisibilityClass::ID0;
        return v;
    }
    if (prof.odd_double_witness && static_cast<int>(prof.odd_double_witness->j) >= ak) {
        const auto n = prof.odd_double_witness->n;  // 2 alpha
        v.values.push_back({"2alpha=2c^j", std::to_string(n)});
        if (n >= 5) {
            mpq_class lhs = detail::qpow(prm.q, n) + detail::qpow(rho, n);
            mpq_class rhs = mpq_class(static_cast<unsigned long>(n)) * rho * rho / 2;
            v.values.push_back({"q^{2alpha}+(r/p)^{2alpha}", detail::fmt_ld(to_long_double(lhs))});
            v.values.push_back({"alpha(r/p)^2", detail::fmt(rhs)});
            v.cls = lhs >= rhs ? DivisibilityClass::ID : DivisibilityClass::ID0;
            v.rule = "mu k<0: 2c^j odd >= 5 with j>=|k|, ID iff q^{2alpha}+(r/p)^{2alpha} >= alpha(r/p)^2";
            return v;
        }
        auto fail = first_failing_149(prm.q, rho);
        v.rule = "mu k<0: 2c^j = 3 with j>=|k|, ID iff the 149 inequalities hold";
        v.values.push_back({"first failing m", fail ? std::to_string(*fail) : "none"});
        v.cls = fail ? DivisibilityClass::ID0 : DivisibilityClass::ID;
        return v;
    }
    v.cls = DivisibilityClass::ID0;
    v.rule = "mu k<0: no j>=|k| with 2c^j natural";
    return v;
}

namespace detail {

template <class Fn>
Verdict sym_verdict(const ModelParams& prm, Fn classify_one, const char* name) {
    Verdict v;
    if (sgn(prm.p) == 0 || sgn(prm.r) == 0) {
        v.cls = DivisibilityClass::ID;
        v.rule = std::string(name) + " sym: p=0 or r=0";
        return v;
    }
    if (prm.p == prm.r) {
        v.cls = DivisibilityClass::ID00;
        v.rule = std::string(name) + " sym: p=r>0, characteristic function has zeros";
        return v;
    }
    std::optional<BoundaryUndecided> pending;
    auto attempt = [&](const ModelParams& x) -> std::optional<Verdict> {
        try {
            return classify_one(x);
        } catch (const BoundaryUndecided& e) {
            pending.emplace(e);
            return std::nullopt;
        }
    };
    auto a = attempt(prm);
    if (a && a->cls == DivisibilityClass::ID) {
        v.cls = DivisibilityClass::ID;
        v.rule = std::string(name) + " sym: ID because the law for (p,q,r) is ID [" + a->rule + "]";
        v.values = a->values;
        return v;
    }
    auto b = attempt(swapped(prm));
    if (b && b->cls == DivisibilityClass::ID) {
        v.cls = DivisibilityClass::ID;
        v.rule = std::string(name) + " sym: ID because the law for (r,q,p) is ID [" + b->rule + "]";
        v.values = b->values;
        v.swapped_used = true;
        return v;
    }
    if (pending) throw *pending;
    v.cls = DivisibilityClass::ID0;
    v.rule = std::string(name) + " sym: neither (p,q,r) nor (r,q,p) gives ID";
    return v;
}

}  // namespace detail

inline std::pair<Verdict, Verdict> classify_sym(const ModelParams& prm) {
    return {detail::sym_verdict(prm, classify_rho, "rho"), detail::sym_verdict(prm, classify_mu, "mu")};
}

inline ClassificationReport classify(const ModelParams& prm) {
    ClassificationReport rep;
    rep.params = prm;
    rep.rho = classify_rho(prm);
    rep.mu = classify_mu(prm);
    auto [rs, ms] = classify_sym(prm);
    rep.rho_sym = std::move(rs);
    rep.mu_sym = std::move(ms);
    rep.swapped_used = rep.rho_sym.swapped_used || rep.mu_sym.swapped_used;
    return rep;
}

struct ScanResult {
    std::vector<ClassificationReport> reports;
    std::optional<int> k0;      // smallest k in range with mu ID
    std::optional<int> k0_sym;  // smallest k in range with mu_sym ID
};

inline ScanResult scan_k(const ModelParams& base, int k_from, int k_to) {
    if (k_from > k_to) throw std::invalid_argument("scan_k needs k_from <= k_to");
    ScanResult out;
    for (int k = k_from; k <= k_to; ++k) {
        out.reports.push_back(classify(with_k(base, k)));
        const auto& r = out.reports.back();
        if (!out.k0 && r.mu.cls == DivisibilityClass::ID) out.k0 = k;
        if (!out.k0_sym && r.mu_sym.cls == DivisibilityClass::ID) out.k0_sym = k;
    }
    return out;
}

}  // namespace qidiv
