#include <catch_amalgamated.hpp>

#include <qidiv/analysis.hpp>
#include <qidiv/qlevy.hpp>

#include <limits>
#include <map>

using namespace qidiv;

namespace {

ModelParams P(CBase c, mpq_class p, mpq_class q, mpq_class r, int k) { return validate(c, p, q, r, k); }

// sign * (m c^e)^root, exact; order-preserving in the real position.
mpq_class key_of(const CBase& c, int sign, long long e, std::uint64_t m) {
    std::uint64_t a, b;
    unsigned root;
    if (auto* rc = std::get_if<RationalC>(&c)) {
        a = rc->num, b = rc->den, root = 1;
    } else {
        auto& rr = std::get<RationalRootC>(c);
        a = rr.num, b = rr.den, root = rr.root;
    }
    mpz_class mr, an, bn, mz = detail::from_u64(m), az = detail::from_u64(a), bz = detail::from_u64(b);
    mpz_pow_ui(mr.get_mpz_t(), mz.get_mpz_t(), root);
    unsigned long ae = static_cast<unsigned long>(e < 0 ? -e : e);
    mpz_pow_ui(an.get_mpz_t(), az.get_mpz_t(), ae);
    mpz_pow_ui(bn.get_mpz_t(), bz.get_mpz_t(), ae);
    mpq_class v = e >= 0 ? mpq_class(mr * an, bn) : mpq_class(mr * bn, an);
    v.canonicalize();
    return sign < 0 ? mpq_class(-v) : v;
}

// Direct double sum of both families keyed by exact position.
std::map<mpq_class, mpq_class> brute_force(const ModelParams& prm, Target t, int N, int M) {
    std::map<mpq_class, mpq_class> out;
    const int levels = t == Target::Mu ? N : 0;
    const bool r_small = prm.r < prm.p;
    const mpq_class base = r_small ? mpq_class(prm.r / prm.p) : mpq_class(prm.p / prm.r);
    const int side = r_small ? 1 : -1;
    for (int n = 0; n <= levels; ++n) {
        mpq_class qm = 1, bm = 1;
        for (int m = 1; m <= M; ++m) {
            qm *= prm.q;
            bm *= base;
            if (sgn(qm) != 0) out[key_of(prm.c, 1, -n, m)] += qm / m;
            if (sgn(bm) != 0) out[key_of(prm.c, side, -prm.k - n, m)] += (m % 2 == 1 ? 1 : -1) * bm / m;
        }
    }
    for (auto it = out.begin(); it != out.end();) it = sgn(it->second) == 0 ? out.erase(it) : std::next(it);
    return out;
}

const Atom* find_atom(const SignedAtomicMeasure& nu, const AtomPosition& pos) {
    for (const auto& a : nu.atoms)
        if (a.position == pos) return &a;
    return nullptr;
}

std::vector<CBase> rational_cs() {
    return {RationalC{2, 1}, RationalC{3, 1}, RationalC{5, 2}, RationalC{3, 2}, RationalRootC{2, 1, 2},
            RationalRootC{2, 1, 3}};
}

}  // namespace

TEST_CASE("negative atom at 2c^{-k} for c=3, k=1", "[qlevy]") {
    auto prm = P(RationalC{3, 1}, mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10), 1);
    auto nu = rho_qlevy(prm);
    const Atom* a = find_atom(nu, canonical_position(prm.c, -1, 2));
    REQUIRE(a);
    CHECK(a->weight == mpq_class(-1, 72));
}

TEST_CASE("amalgamated atoms for c=2, k=-1", "[qlevy]") {
    auto prm = P(RationalC{2, 1}, mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10), -1);
    auto nu = rho_qlevy(prm);
    const mpq_class q = prm.q, rho = prm.r / prm.p;
    const Atom* two = find_atom(nu, AtomPosition{1, 0, 2});
    const Atom* four = find_atom(nu, AtomPosition{1, 0, 4});
    REQUIRE(two);
    REQUIRE(four);
    CHECK(two->weight == q * q / 2 + rho);
    CHECK(four->weight == q * q * q * q / 4 - rho * rho / 2);
}

TEST_CASE("r=0 gives the geometric Levy measure", "[qlevy]") {
    auto prm = P(RationalC{2, 1}, mpq_class(1, 2), mpq_class(1, 2), mpq_class(0), 3);
    auto nu = rho_qlevy(prm, 50);
    REQUIRE(nu.atoms.size() == 50);
    mpq_class qm = 1;
    for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
        qm *= prm.q;
        CHECK(nu.atoms[i].position == AtomPosition{1, 0, i + 1});
        CHECK(nu.atoms[i].weight == qm / static_cast<unsigned long>(i + 1));
    }
}

TEST_CASE("support sides", "[qlevy]") {
    auto neg = P(RationalC{2, 1}, mpq_class(1, 4), mpq_class(0), mpq_class(3, 4), 1);
    for (auto t : {Target::Rho, Target::Mu}) {
        auto nu = build_qlevy(neg, t, 40, 400);
        REQUIRE_FALSE(nu.atoms.empty());
        for (const auto& a : nu.atoms) CHECK(position_value(neg.c, a.position) < 0);
    }
    for (const auto& c : rational_cs())
        for (int k = -2; k <= 2; ++k) {
            auto pos = P(c, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), k);
            auto nu = mu_qlevy(pos, 10, 60);
            for (const auto& a : nu.atoms) CHECK(position_value(c, a.position) > 0);
        }
}

TEST_CASE("drift for p<r", "[qlevy]") {
    auto prm = P(RationalC{3, 1}, mpq_class(1, 5), mpq_class(3, 10), mpq_class(1, 2), 1);
    auto nu = mu_qlevy(prm, 40, 100);
    long double full = c_pow(prm.c, -1) / (1 - 1.0L / 3);
    CHECK(std::fabs(full - nu.drift_value) <= nu.tail_moment_bound + 4 * std::numeric_limits<long double>::epsilon() * full);
    CHECK(full > nu.drift_value);
    CHECK(nu.drift_exponents.size() == 41);
    auto r = rho_qlevy(prm, 100);
    CHECK(r.drift_value == Catch::Approx(1.0 / 3).epsilon(1e-15));
    auto positive_case = mu_qlevy(P(RationalC{3, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), 1), 10, 50);
    CHECK(positive_case.drift_value == 0);
}

TEST_CASE("p=r is rejected", "[qlevy]") {
    auto prm = P(RationalC{2, 1}, mpq_class(1, 4), mpq_class(1, 2), mpq_class(1, 4), 0);
    CHECK_THROWS_AS(rho_qlevy(prm), NotQuasiID);
    CHECK_THROWS_AS(mu_qlevy(prm), NotQuasiID);
}

TEST_CASE("exact amalgamation matches a brute-force sum", "[qlevy][oracle]") {
    const std::vector<std::array<mpq_class, 3>> pqr = {{mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5)},
                                                       {mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10)},
                                                       {mpq_class(1, 5), mpq_class(3, 10), mpq_class(1, 2)},
                                                       {mpq_class(0), mpq_class(1, 2), mpq_class(1, 2)},
                                                       {mpq_class(2, 3), mpq_class(1, 3), mpq_class(0)}};
    for (const auto& c : rational_cs())
        for (int k = -2; k <= 2; ++k)
            for (const auto& [p, q, r] : pqr)
                for (auto t : {Target::Rho, Target::Mu}) {
                    auto prm = P(c, p, q, r, k);
                    auto nu = build_qlevy(prm, t, 6, 40);
                    auto ref = brute_force(prm, t, 6, 40);
                    INFO(describe(prm) << (t == Target::Mu ? " mu" : " rho"));
                    REQUIRE(nu.atoms.size() == ref.size());
                    mpq_class prev_key;
                    bool first = true;
                    for (const auto& a : nu.atoms) {
                        mpq_class key = key_of(c, a.position.sign, a.position.e, a.position.m);
                        auto it = ref.find(key);
                        REQUIRE(it != ref.end());
                        CHECK(it->second == a.weight);
                        if (!first) CHECK(prev_key < key);
                        prev_key = key;
                        first = false;
                    }
                }
}

TEST_CASE("tail bound dominates the omitted mass", "[qlevy]") {
    auto prm = P(RationalC{2, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), 1);
    auto small = build_qlevy(prm, Target::Rho, 0, 20);
    mpq_class qm = 1, rm = 1, rho = prm.r / prm.p, omitted = 0;
    for (int m = 1; m <= 400; ++m) {
        qm *= prm.q;
        rm *= rho;
        if (m > 20) omitted += (qm + rm) / m;
    }
    CHECK(to_long_double(omitted) <= small.tail_bound);
}

TEST_CASE("exp of the measure reproduces the characteristic functions", "[qlevy][cf]") {
    const std::vector<ModelParams> sets = {
        P(RationalC{2, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), 1),
        P(RationalC{3, 2}, mpq_class(69, 100), mpq_class(3, 10), mpq_class(1, 100), -1),
        P(RationalC{2, 1}, mpq_class(1, 4), mpq_class(0), mpq_class(3, 4), 1),
        P(RationalRootC{2, 1, 2}, mpq_class(1, 5), mpq_class(1, 2), mpq_class(3, 10), 0),
        P(RationalC{5, 2}, mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10), 2)};
    for (const auto& prm : sets) {
        auto nr = rho_qlevy(prm, 400);
        auto nm = mu_qlevy(prm, 60, 400);
        for (int i = 0; i <= 20; ++i) {
            double z = -10 + i;
            auto er = measure_cf(nr, prm.c, z);
            auto em = measure_cf(nm, prm.c, z);
            auto mu = mu_cf(prm, z, 1e-12);
            INFO(describe(prm) << " z=" << z);
            CHECK(std::abs(cplx(er.re, er.im) - rho_cf(prm, z)) <= er.error_bound + 1e-12);
            CHECK(std::abs(cplx(em.re, em.im) - mu.value) <= em.error_bound + mu.error_bound + 1e-11);
        }
    }
}

TEST_CASE("first absolute moment bound for 0<r<p", "[qlevy]") {
    for (const auto& c : rational_cs())
        for (int k = -2; k <= 2; ++k) {
            auto prm = P(c, mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10), k);
            auto nu = mu_qlevy(prm, 30, 200);
            long double s = 0;
            for (const auto& a : nu.atoms) s += position_value(c, a.position) * std::fabs(to_long_double(a.weight));
            long double cc = c_value(c), q = 0.3L, rho = 1.0L / 6;
            long double bound = cc / (cc - 1) * (q / (1 - q) + c_pow(c, -k) * rho / (1 - rho));
            CHECK(s <= bound * (1 + 1e-12L));
        }
}

TEST_CASE("oracle verdicts on worked cases", "[qlevy][oracle]") {
    auto v1 = oracle_classify(P(RationalC{2, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), 1), Target::Mu);
    REQUIRE(std::holds_alternative<AllNonnegative>(v1));
    CHECK(certified(v1));

    auto v2 = oracle_classify(P(RationalC{3, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), 1), Target::Mu);
    REQUIRE(std::holds_alternative<NegativeAtom>(v2));
    CHECK(certified(v2));
    CHECK(sgn(std::get<NegativeAtom>(v2).weight) < 0);

    auto v3 = oracle_classify(P(RationalC{2, 1}, mpq_class(0), mpq_class(1, 2), mpq_class(1, 2), 0), Target::Mu);
    CHECK(std::holds_alternative<AllNonnegative>(v3));
    CHECK(certified(v3));

    auto v4 = oracle_classify(P(RationalC{2, 1}, mpq_class(1, 4), mpq_class(0), mpq_class(3, 4), 1), Target::Rho);
    CHECK(std::holds_alternative<NegativeAtom>(v4));

    auto rho_neg = oracle_classify(P(RationalC{3, 2}, mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10), -1),
                                   Target::Rho);
    CHECK(std::holds_alternative<NegativeAtom>(rho_neg));
}

TEST_CASE("uncertifiable windows raise Inconclusive", "[qlevy][oracle]") {
    auto prm = P(RationalC{3, 2}, mpq_class(3, 10), mpq_class(3, 5), mpq_class(1, 10), -1);
    CHECK_FALSE(certified(oracle_scan(prm, Target::Rho, 40, 400)));
    try {
        oracle_classify(prm, Target::Rho);
        FAIL("expected Inconclusive");
    } catch (const Inconclusive& e) {
        CHECK(e.suggested_M > 400);
    }
}

TEST_CASE("fast scan agrees with the scan of the full measure", "[qlevy][oracle]") {
    const std::vector<std::array<mpq_class, 3>> pqr = {{mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5)},
                                                       {mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10)},
                                                       {mpq_class(1, 5), mpq_class(3, 10), mpq_class(1, 2)},
                                                       {mpq_class(7, 20), mpq_class(3, 5), mpq_class(1, 20)},
                                                       {mpq_class(1, 4), mpq_class(0), mpq_class(3, 4)}};
    int compared = 0;
    for (const auto& c : rational_cs())
        for (int k = -2; k <= 2; ++k)
            for (const auto& [p, q, r] : pqr)
                for (auto t : {Target::Rho, Target::Mu}) {
                    auto prm = P(c, p, q, r, k);
                    const int M = 120;
                    const int N = t == Target::Mu ? levels_needed(prm, M) : 0;
                    auto slow = scan_signs(prm, build_qlevy(prm, t, N, M));
                    auto fast = oracle_scan(prm, t, N, M);
                    INFO(describe(prm) << (t == Target::Mu ? " mu" : " rho"));
                    REQUIRE(slow.index() == fast.index());
                    CHECK(certified(slow) == certified(fast));
                    if (auto* sn = std::get_if<NegativeAtom>(&slow)) {
                        auto& fn = std::get<NegativeAtom>(fast);
                        CHECK(sn->position == fn.position);
                        CHECK(sn->weight == fn.weight);
                    }
                    ++compared;
                }
    CHECK(compared == 6 * 5 * 5 * 2);
}
