#pragma once

#include "exactnum.hpp"
#include "params.hpp"
#include "specfun.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace qidiv {

class NotQuasiID : public std::domain_error {
public:
    NotQuasiID() : std::domain_error("p = r > 0: the law is not quasi-infinitely divisible") {}
};

struct Inconclusive : std::runtime_error {
    int suggested_N;
    int suggested_M;
    Inconclusive(const std::string& what, int n, int m) : std::runtime_error(what), suggested_N(n), suggested_M(m) {}
};

struct Atom {
    AtomPosition position;
    mpq_class weight;
};

struct SignedAtomicMeasure {
    Target target = Target::Rho;
    std::vector<Atom> atoms;               // sorted by position value, positions pairwise distinct
    std::vector<long long> drift_exponents;  // drift = sum over e of c^e
    long double drift_value = 0;
    int N = 0;
    int M = 0;
    // total variation of omitted atoms with m > M on the retained levels
    long double tail_bound = 0;
    // integral of |x| against |nu| over the omitted levels n > N, plus the omitted drift
    long double tail_moment_bound = 0;
    // omitted mass of each sign that can land on a single position
    long double position_pos_bound = 0;
    long double position_neg_bound = 0;
};

struct AllNonnegative {
    bool certified = false;
};

struct NegativeAtom {
    AtomPosition position;
    mpq_class weight;
    bool certified = false;
};

using SignVerdict = std::variant<AllNonnegative, NegativeAtom>;

inline bool certified(const SignVerdict& v) {
    return std::visit([](const auto& x) { return x.certified; }, v);
}

namespace detail {

// Alternating family: (-1)^{m+1} rho^m / m at sign * m c^{-k-n}; q family: q^m / m at m c^{-n}.
struct FamilySetup {
    mpq_class rho;       // r/p or p/r, zero when absent
    int r_side = 1;      // side of the alternating family
    bool drift = false;  // p < r
};

inline FamilySetup family_setup(const ModelParams& prm) {
    if (sgn(prm.p) > 0 && prm.p == prm.r) throw NotQuasiID();
    FamilySetup s;
    if (sgn(prm.r) == 0) return s;
    if (prm.r < prm.p) {
        s.rho = prm.r / prm.p;
        return s;
    }
    s.rho = prm.p / prm.r;  // zero when p = 0
    s.r_side = -1;
    s.drift = true;
    return s;
}

// log of sum_{m > M} x^m / m, bounded by x^{M+1} / ((M+1)(1-x)); -inf for x = 0.
inline long double log_geometric_tail(long double log_x, long double x, int M) {
    if (x <= 0) return -std::numeric_limits<long double>::infinity();
    return static_cast<long double>(M + 1) * log_x - std::log(static_cast<long double>(M + 1)) - std::log1p(-x);
}

inline long double exp_clamped(long double lv) {
    if (lv == -std::numeric_limits<long double>::infinity()) return 0;
    long double v = std::exp(lv);
    return v > 0 ? v : std::numeric_limits<long double>::denorm_min();
}

struct TailLogs {
    long double log_q_tail = -std::numeric_limits<long double>::infinity();
    long double log_r_tail = -std::numeric_limits<long double>::infinity();
};

inline TailLogs tail_logs(const mpq_class& q, const mpq_class& rho, int M) {
    TailLogs t;
    if (sgn(q) > 0) t.log_q_tail = log_geometric_tail(log_abs(q), to_long_double(q), M);
    if (sgn(rho) > 0) t.log_r_tail = log_geometric_tail(log_abs(rho), to_long_double(rho), M);
    return t;
}

inline long double log_add(long double a, long double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<long double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

inline void fill_bounds(SignedAtomicMeasure& out, const ModelParams& prm, const FamilySetup& fs, int N, int M,
                        Target target) {
    TailLogs t = tail_logs(prm.q, fs.rho, M);
    long double levels = target == Target::Mu ? static_cast<long double>(N + 1) : 1.0L;
    out.tail_bound = levels * (exp_clamped(t.log_q_tail) + exp_clamped(t.log_r_tail));
    out.position_pos_bound = exp_clamped(log_add(t.log_q_tail, t.log_r_tail));
    out.position_neg_bound = exp_clamped(t.log_r_tail);
    if (target == Target::Mu) {
        long double ic = 1.0L / c_value(prm.c);
        long double ck = c_pow(prm.c, -prm.k);
        long double qd = to_long_double(prm.q), rd = to_long_double(fs.rho);
        long double level_moment = qd / (1 - qd) + ck * rd / (1 - rd);
        long double scale = c_pow(prm.c, -(N + 1)) / (1 - ic);
        out.tail_moment_bound = scale * level_moment + (fs.drift ? ck * scale : 0.0L);
    }
}

}  // namespace detail

// Exact truncated quasi-Levy measure. For Target::Rho the level index N is ignored.
inline SignedAtomicMeasure build_qlevy(const ModelParams& prm, Target target, int N, int M) {
    if (M < 1 || N < 0) throw std::invalid_argument("truncation needs N >= 0 and M >= 1");
    auto fs = detail::family_setup(prm);
    const int levels = target == Target::Mu ? N : 0;
    SignedAtomicMeasure out;
    out.target = target;
    out.N = levels;
    out.M = M;

    std::vector<mpq_class> qw(M + 1), rw(M + 1);
    mpq_class qp = 1, rp = 1;
    for (int m = 1; m <= M; ++m) {
        qp *= prm.q;
        rp *= fs.rho;
        qw[m] = qp / m;
        rw[m] = rp / m;
        if (m % 2 == 0) rw[m] = -rw[m];
    }

    std::unordered_map<AtomPosition, mpq_class, AtomPositionHash> acc;
    acc.reserve(static_cast<std::size_t>(2 * M * (levels + 1)));
    auto add = [&](const AtomPosition& pos, const mpq_class& w) {
        auto [it, fresh] = acc.try_emplace(pos, w);
        if (!fresh) it->second += w;
    };
    for (int n = 0; n <= levels; ++n) {
        for (int m = 1; m <= M; ++m) {
            if (sgn(prm.q) > 0) add(canonical_position(prm.c, -n, static_cast<std::uint64_t>(m)), qw[m]);
            if (sgn(fs.rho) > 0)
                add(canonical_position(prm.c, -static_cast<long long>(prm.k) - n, static_cast<std::uint64_t>(m),
                                       fs.r_side),
                    rw[m]);
        }
        if (fs.drift) out.drift_exponents.push_back(-static_cast<long long>(prm.k) - n);
    }
    for (auto e : out.drift_exponents) out.drift_value += c_pow(prm.c, e);

    out.atoms.reserve(acc.size());
    for (auto& [pos, w] : acc) out.atoms.push_back(Atom{pos, w});
    std::vector<long double> key(out.atoms.size());
    std::vector<std::size_t> order(out.atoms.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
        key[i] = position_value(prm.c, out.atoms[i].position);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) return key[a] < key[b];
        const auto& pa = out.atoms[a].position;
        const auto& pb = out.atoms[b].position;
        return std::tie(pa.e, pa.m) < std::tie(pb.e, pb.m);
    });
    std::vector<Atom> sorted;
    sorted.reserve(order.size());
    for (auto i : order) sorted.push_back(std::move(out.atoms[i]));
    out.atoms = std::move(sorted);

    detail::fill_bounds(out, prm, fs, levels, M, target);
    return out;
}

inline SignedAtomicMeasure rho_qlevy(const ModelParams& prm, int M = 400) { return build_qlevy(prm, Target::Rho, 0, M); }

inline SignedAtomicMeasure mu_qlevy(const ModelParams& prm, int N = 40, int M = 400) {
    return build_qlevy(prm, Target::Mu, N, M);
}

// exp( sum w (e^{izx} - 1) + i drift z ), with a bound on the effect of everything omitted.
struct MeasureCF {
    double re = 1, im = 0;
    double error_bound = 0;
};

inline MeasureCF measure_cf(const SignedAtomicMeasure& nu, const CBase& c, double z) {
    long double sr = 0, si = 0;
    for (const auto& a : nu.atoms) {
        long double x = position_value(c, a.position);
        long double w = to_long_double(a.weight);
        sr += w * (std::cos(z * x) - 1);
        si += w * std::sin(z * x);
    }
    si += nu.drift_value * z;
    long double mod = std::exp(sr);
    MeasureCF out;
    out.re = static_cast<double>(mod * std::cos(si));
    out.im = static_cast<double>(mod * std::sin(si));
    long double delta = 2 * nu.tail_bound + std::fabs(z) * nu.tail_moment_bound;
    long double rounding = 1e-15L * (1 + std::fabs(sr) + std::fabs(si)) * mod;
    out.error_bound = static_cast<double>(mod * std::expm1(delta) + rounding);
    return out;
}

// Smallest positive |position| that is not a scaled copy of a larger one: min(1, c^{-k}).
inline long long self_similar_floor_exponent(const ModelParams& prm) { return -std::max(prm.k, 0); }

// Level index needed for every member with m <= M of a position with |x| >= min(1, c^{-k}).
inline int levels_needed(const ModelParams& prm, int M) {
    long double v = std::log(static_cast<long double>(M)) / log_c(prm.c) + std::abs(prm.k);
    return static_cast<int>(std::floor(v + 1e-9L)) + 1;
}

namespace detail {

inline constexpr long double certify_margin = 1e-9L;
inline constexpr long double neg_inf = -std::numeric_limits<long double>::infinity();

// Omitted mass of each sign that can land on one position, found by walking every
// representation m c^e of the position (e decreasing in steps of the rational period).
class LocalBounds {
public:
    LocalBounds(const ModelParams& prm, Target target, int N, int M)
        : target_(target), N_(N), M_(M), bp_(base_power(prm.c)), fs_(family_setup(prm)), k_(prm.k) {
        if (sgn(prm.q) > 0) {
            q_ = to_long_double(prm.q);
            lq_ = log_abs(prm.q);
        }
        if (sgn(fs_.rho) > 0) {
            r_ = to_long_double(fs_.rho);
            lr_ = log_abs(fs_.rho);
        }
    }

    // (log positive bound, log negative bound) for the position m_star c^{e_star} on `side`,
    // given in largest-exponent form.
    std::pair<long double, long double> operator()(long long e_star, std::uint64_t m_star, int side) const {
        long double pos = neg_inf, neg = neg_inf;
        if (side > 0 && q_ > 0) walk(e_star, m_star, 0, q_, lq_, false, pos, neg);
        if (side == fs_.r_side && r_ > 0) walk(e_star, m_star, k_, r_, lr_, true, pos, neg);
        return {pos, neg};
    }

private:
    void walk(long long e, std::uint64_t m, int offset, long double x, long double lx, bool alternating,
              long double& pos, long double& neg) const {
        for (;;) {
            long long n = -static_cast<long long>(offset) - e;
            if (m > static_cast<std::uint64_t>(M_)) {
                // every further representation has a larger, distinct multiplier
                long double tail = static_cast<long double>(m) * lx - std::log(static_cast<long double>(m)) - std::log1p(-x);
                pos = log_add(pos, tail);
                if (alternating) neg = log_add(neg, tail);
                return;
            }
            bool member = n >= 0 && (target_ == Target::Mu || n == 0);
            if (member && target_ == Target::Mu && n > N_) {
                long double lt = static_cast<long double>(m) * lx - std::log(static_cast<long double>(m));
                if (alternating && m % 2 == 0) neg = log_add(neg, lt);
                else pos = log_add(pos, lt);
            }
            if (!bp_ || (target_ == Target::Rho && n >= 0)) return;
            if (m % bp_->den != 0) return;
            m = m / bp_->den * bp_->num;
            e -= bp_->l;
        }
    }

    Target target_;
    int N_, M_;
    std::optional<RationalPower> bp_;
    FamilySetup fs_;
    int k_;
    long double q_ = 0, lq_ = 0, r_ = 0, lr_ = 0;
};

// Certification of one atom against its local omitted mass.
enum class AtomCheck { CertifiedNegative, UncertainNegative, CertifiedNonnegative, UncertainNonnegative };

inline AtomCheck check_atom(int s, long double log_w, std::pair<long double, long double> b) {
    if (s < 0) return log_w > b.first + certify_margin ? AtomCheck::CertifiedNegative : AtomCheck::UncertainNegative;
    if (b.second == neg_inf) return AtomCheck::CertifiedNonnegative;
    return s > 0 && log_w > b.second + certify_margin ? AtomCheck::CertifiedNonnegative
                                                      : AtomCheck::UncertainNonnegative;
}

inline std::pair<long long, std::uint64_t> max_exponent_form(const CBase& c, const AtomPosition& a) {
    long long e = a.e;
    std::uint64_t m = a.m;
    if (auto bp = base_power(c)) to_max_exponent(bp->num, bp->den, bp->l, e, m);
    return {e, m};
}

}  // namespace detail

// Sign scan of an already built measure over atoms with |x| >= min(1, c^{-k}); every smaller
// atom of the stationary law repeats the weight of one of these.
inline SignVerdict scan_signs(const ModelParams& prm, const SignedAtomicMeasure& nu) {
    if (nu.target == Target::Mu && nu.N < levels_needed(prm, nu.M)) return AllNonnegative{false};
    detail::LocalBounds bounds(prm, nu.target, nu.N, nu.M);
    const long double floor_value = c_pow(prm.c, self_similar_floor_exponent(prm)) * (1 - 1e-12L);
    std::optional<NegativeAtom> best, first_negative;
    long double best_x = 0, first_x = 0;
    bool uncertain = false;
    for (const auto& a : nu.atoms) {
        long double x = std::fabs(position_value(prm.c, a.position));
        if (x < floor_value) continue;
        int s = sgn(a.weight);
        auto [e, m] = detail::max_exponent_form(prm.c, a.position);
        auto chk = detail::check_atom(s, s == 0 ? detail::neg_inf : log_abs(a.weight), bounds(e, m, a.position.sign));
        if (chk == detail::AtomCheck::CertifiedNegative) {
            if (!best || x < best_x) {
                best = NegativeAtom{a.position, a.weight, true};
                best_x = x;
            }
        } else if (chk == detail::AtomCheck::UncertainNegative) {
            uncertain = true;
            if (!first_negative || x < first_x) {
                first_negative = NegativeAtom{a.position, a.weight, false};
                first_x = x;
            }
        } else if (chk == detail::AtomCheck::UncertainNonnegative) {
            uncertain = true;
        }
    }
    if (best) return *best;
    if (first_negative) return *first_negative;
    return AllNonnegative{!uncertain};
}

// Magnitudes q^m/m and rho^m/m over one common denominator, shared by every (c, k).
class WeightTable {
public:
    WeightTable(const mpq_class& q, const mpq_class& rho, int M) : q_(q), rho_(rho), M_(M) {
        mpz_class L = 1;
        for (int m = 2; m <= M; ++m) mpz_lcm_ui(L.get_mpz_t(), L.get_mpz_t(), static_cast<unsigned long>(m));
        const mpz_class A = q.get_num(), B = q.get_den(), C = rho.get_num(), D = rho.get_den();
        auto powers = [M](const mpz_class& x) {
            std::vector<mpz_class> v(M + 1);
            v[0] = 1;
            for (int i = 1; i <= M; ++i) v[i] = v[i - 1] * x;
            return v;
        };
        auto Ap = powers(A), Bp = powers(B), Cp = powers(C), Dp = powers(D);
        S_ = Bp[M] * Dp[M] * L;
        const mpz_class qscale = Dp[M] * L, rscale = Bp[M] * L;
        qn_.resize(M + 1);
        rn_.resize(M + 1);
        ql_.assign(M + 1, -std::numeric_limits<long double>::infinity());
        rl_.assign(M + 1, -std::numeric_limits<long double>::infinity());
        const long double lq = sgn(q) > 0 ? log_abs(q) : 0, lr = sgn(rho) > 0 ? log_abs(rho) : 0;
        for (int m = 1; m <= M; ++m) {
            mpz_class t;
            if (sgn(q) > 0) {
                t = qscale / m;
                qn_[m] = Ap[m] * Bp[M - m] * t;
                ql_[m] = m * lq - std::log(static_cast<long double>(m));
            }
            if (sgn(rho) > 0) {
                t = rscale / m;
                rn_[m] = Cp[m] * Dp[M - m] * t;
                rl_[m] = m * lr - std::log(static_cast<long double>(m));
            }
        }
        log_S_ = log_abs(mpq_class(S_));
    }

    const mpq_class& q() const { return q_; }
    const mpq_class& rho() const { return rho_; }
    int M() const { return M_; }
    const mpz_class& scaled_q(int m) const { return qn_[m]; }
    const mpz_class& scaled_r(int m) const { return rn_[m]; }
    long double log_q(int m) const { return ql_[m]; }
    long double log_r(int m) const { return rl_[m]; }
    const mpz_class& denominator() const { return S_; }
    long double log_denominator() const { return log_S_; }

private:
    mpq_class q_, rho_;
    int M_;
    mpz_class S_;
    long double log_S_ = 0;
    std::vector<mpz_class> qn_, rn_;
    std::vector<long double> ql_, rl_;
};

inline WeightTable make_weight_table(const ModelParams& prm, int M) {
    auto fs = detail::family_setup(prm);
    return WeightTable(prm.q, fs.rho, M);
}

namespace detail {

struct ScanTerm {
    long long e;        // exponent in largest-exponent form
    std::uint32_t m;    // multiplier in largest-exponent form (never exceeds M)
    std::uint32_t orig_m;
    long long orig_e;
    std::int8_t side;
    bool alternating;
};

struct ScanGroup {
    int first = -1;
    int count = 0;
    bool has_pos = false, has_neg = false;
};

}  // namespace detail

// Sign scan on scaled integers; same verdict as scan_signs(prm, build_qlevy(prm, target, N, M)).
inline SignVerdict oracle_scan(const ModelParams& prm, Target target, int N, int M, const WeightTable* table = nullptr) {
    auto fs = detail::family_setup(prm);
    std::optional<WeightTable> own;
    if (!table || table->M() != M || table->q() != prm.q || table->rho() != fs.rho) {
        own.emplace(prm.q, fs.rho, M);
        table = &*own;
    }
    if (target == Target::Mu && N < levels_needed(prm, M))
        return AllNonnegative{false};

    const long double lc = log_c(prm.c);
    const int kplus = std::max(prm.k, 0);
    auto bp = detail::base_power(prm.c);
    std::vector<detail::ScanTerm> terms;
    terms.reserve(static_cast<std::size_t>(M) * 16);
    long long e_lo = std::numeric_limits<long long>::max(), e_hi = std::numeric_limits<long long>::min();
    auto push = [&](long long e, int m, int side, bool alt) {
        detail::ScanTerm t{e, static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(m), e,
                           static_cast<std::int8_t>(side), alt};
        if (bp) {
            std::uint64_t mm = t.m;
            detail::to_max_exponent(bp->num, bp->den, bp->l, t.e, mm);
            t.m = static_cast<std::uint32_t>(mm);
        }
        e_lo = std::min(e_lo, t.e);
        e_hi = std::max(e_hi, t.e);
        terms.push_back(t);
    };
    auto family = [&](int offset, int side, bool alt) {
        for (int m = 1; m <= M; ++m) {
            int n_max = 0;
            if (target == Target::Mu) {
                long double v = std::log(static_cast<long double>(m)) / lc - offset + kplus;
                n_max = std::min(N, static_cast<int>(std::floor(v + 1e-9L)));
            }
            for (int n = 0; n <= n_max; ++n) push(-static_cast<long long>(offset) - n, m, side, alt);
        }
    };
    if (sgn(prm.q) > 0) family(0, 1, false);
    if (sgn(fs.rho) > 0) family(prm.k, fs.r_side, true);
    if (terms.empty()) return AllNonnegative{true};

    const std::size_t width = static_cast<std::size_t>(M) + 1;
    const std::size_t rows = static_cast<std::size_t>(e_hi - e_lo + 1);
    std::vector<int> slot(rows * width * 2, -1);
    std::vector<int> next(terms.size(), -1);
    std::vector<detail::ScanGroup> groups;
    groups.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        std::size_t idx = ((static_cast<std::size_t>(t.e - e_lo) * width) + t.m) * 2 + (t.side < 0 ? 1 : 0);
        bool negative = t.alternating && t.orig_m % 2 == 0;
        int g = slot[idx];
        if (g < 0) {
            g = static_cast<int>(groups.size());
            slot[idx] = g;
            groups.push_back({});
        } else {
            next[i] = groups[g].first;
        }
        groups[g].first = static_cast<int>(i);
        ++groups[g].count;
        (negative ? groups[g].has_neg : groups[g].has_pos) = true;
    }

    detail::LocalBounds bounds(prm, target, N, M);
    const long double log_S = table->log_denominator();
    auto term_log = [&](const detail::ScanTerm& t) {
        return t.alternating ? table->log_r(static_cast<int>(t.orig_m)) : table->log_q(static_cast<int>(t.orig_m));
    };
    auto term_scaled = [&](const detail::ScanTerm& t) -> const mpz_class& {
        return t.alternating ? table->scaled_r(static_cast<int>(t.orig_m)) : table->scaled_q(static_cast<int>(t.orig_m));
    };
    auto exact_weight = [&](const detail::ScanGroup& g) {
        mpz_class acc = 0;
        for (int i = g.first; i >= 0; i = next[i]) {
            const auto& t = terms[i];
            if (t.alternating && t.orig_m % 2 == 0) acc -= term_scaled(t);
            else acc += term_scaled(t);
        }
        return acc;
    };
    auto position_of = [&](const detail::ScanGroup& g) {
        const auto& t = terms[g.first];
        return canonical_position(prm.c, t.orig_e, t.orig_m, t.side);
    };
    auto weight_of = [&](const mpz_class& scaled) {
        mpq_class w(scaled, table->denominator());
        w.canonicalize();
        return w;
    };

    std::optional<NegativeAtom> best, first_negative;
    long double best_x = 0, first_x = 0;
    bool uncertain = false;
    mpz_class acc;
    for (const auto& g : groups) {
        int s;
        long double lw;
        if (!g.has_neg || !g.has_pos) {
            s = g.has_neg ? -1 : 1;
            lw = -std::numeric_limits<long double>::infinity();
            for (int i = g.first; i >= 0; i = next[i]) lw = detail::log_add(lw, term_log(terms[i]));
        } else {
            acc = exact_weight(g);
            s = sgn(acc);
            lw = s == 0 ? -std::numeric_limits<long double>::infinity() : log_abs(mpq_class(acc)) - log_S;
        }
        const auto& head = terms[g.first];
        auto chk = detail::check_atom(s, lw, bounds(head.e, head.m, head.side));
        if (chk == detail::AtomCheck::CertifiedNegative) {
            auto pos = position_of(g);
            long double x = std::fabs(position_value(prm.c, pos));
            if (!best || x < best_x) {
                best = NegativeAtom{pos, weight_of(exact_weight(g)), true};
                best_x = x;
            }
        } else if (chk == detail::AtomCheck::UncertainNegative) {
            uncertain = true;
            auto pos = position_of(g);
            long double x = std::fabs(position_value(prm.c, pos));
            if (!first_negative || x < first_x) {
                first_negative = NegativeAtom{pos, weight_of(exact_weight(g)), false};
                first_x = x;
            }
        } else if (chk == detail::AtomCheck::UncertainNonnegative) {
            uncertain = true;
        }
    }
    if (best) return *best;
    if (first_negative) return *first_negative;
    return AllNonnegative{!uncertain};
}

// Certified sign verdict or Inconclusive carrying a larger truncation to try.
inline SignVerdict oracle_classify(const ModelParams& prm, Target target, int N = 40, int M = 400,
                                   const WeightTable* table = nullptr) {
    auto v = oracle_scan(prm, target, N, M, table);
    if (!certified(v)) {
        int n2 = std::max(N, target == Target::Mu ? levels_needed(prm, 2 * M) : N);
        throw Inconclusive("truncation too small to certify the sign pattern", n2, 2 * M);
    }
    return v;
}

}  // namespace qidiv
