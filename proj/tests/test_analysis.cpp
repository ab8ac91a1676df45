#include <catch_amalgamated.hpp>

#include <qidiv/analysis.hpp>
#include <qidiv/sampler.hpp>

#include <cmath>
#include <numbers>

using namespace qidiv;
using Catch::Matchers::WithinAbs;

namespace {

ModelParams P(CBase c, mpq_class p, mpq_class q, mpq_class r, int k) { return validate(c, p, q, r, k); }

std::vector<double> grid21() { return linear_grid(-10, 10, 21); }

// One set per coarse case: r=0, p=0, 0<r<p, 0<p<r, p=r, plus a root base with k<0.
std::vector<ModelParams> coarse_sets() {
    return {P(RationalC{2, 1}, mpq_class(1, 2), mpq_class(1, 2), mpq_class(0), 1),
            P(RationalC{3, 1}, mpq_class(0), mpq_class(1, 3), mpq_class(2, 3), 0),
            P(RationalC{3, 2}, mpq_class(69, 100), mpq_class(3, 10), mpq_class(1, 100), -1),
            P(RationalC{5, 2}, mpq_class(1, 5), mpq_class(3, 10), mpq_class(1, 2), 2),
            P(RationalRootC{2, 1, 2}, mpq_class(1, 4), mpq_class(1, 2), mpq_class(1, 4), -2)};
}

// Entropy by explicit atoms: p q^j at j, r q^m at m + d, merged on integer d.
double brute_entropy(double p, double q, double r, double d, bool integral) {
    double H = 0;
    auto add = [&](double w) {
        if (w > 0) H -= w * std::log(w);
    };
    const int J = 20000;
    if (integral) {
        int di = static_cast<int>(std::lround(d));
        for (int j = 0; j < J; ++j) add(p * std::pow(q, j) + (j >= di ? r * std::pow(q, j - di) : 0.0));
    } else {
        for (int j = 0; j < J; ++j) add(p * std::pow(q, j));
        for (int j = 0; j < J; ++j) add(r * std::pow(q, j));
    }
    return H;
}

double eq_entropy(double p, double q, double r) {
    auto t = [](double x) { return x > 0 ? -x * std::log(x) : 0.0; };
    return (t(p) + t(q) + t(r)) / (1 - q);
}

}  // namespace

TEST_CASE("factor characteristic function", "[analysis]") {
    auto prm = P(RationalC{2, 1}, mpq_class(3, 5), mpq_class(3, 10), mpq_class(1, 10), 1);
    CHECK(rho_cf(prm, 0.0) == cplx(1, 0));
    auto zero = P(RationalC{2, 1}, mpq_class(1, 4), mpq_class(1, 2), mpq_class(1, 4), 2);
    CHECK(std::abs(rho_cf(zero, 4 * std::numbers::pi)) < 1e-15);
    auto geo = P(RationalC{3, 1}, mpq_class(2, 5), mpq_class(3, 5), mpq_class(0), 0);
    for (double z : grid21())
        CHECK_THAT(std::abs(rho_cf(geo, z)), WithinAbs(0.4 / std::abs(1.0 - 0.6 * std::polar(1.0, z)), 1e-14));
}

TEST_CASE("stationary characteristic function identities", "[analysis]") {
    const double tol = 1e-10;
    for (const auto& prm : coarse_sets()) {
        const long double c = c_value(prm.c);
        const double p = static_cast<double>(to_long_double(prm.p)), q = static_cast<double>(to_long_double(prm.q)),
                     r = static_cast<double>(to_long_double(prm.r));
        auto up = with_k(prm, prm.k + 1);
        CHECK(mu_cf(prm, 0.0, tol).value == cplx(1, 0));
        CHECK(mu_cf(prm, 0.0, tol).error_bound == 0);
        for (double z : grid21()) {
            INFO(describe(prm) << " z=" << z);
            auto m = mu_cf(prm, z, tol);
            CHECK(m.error_bound < tol);
            CHECK(std::abs(m.value) <= 1 + m.error_bound);
            double zc = static_cast<double>(z / c);
            auto mc = mu_cf(prm, zc, tol);
            CHECK(std::abs(m.value - rho_cf(prm, z) * mc.value) <= 2 * tol);
            double ck = static_cast<double>(c_pow(prm.c, -prm.k));
            cplx mix = (p + r * std::polar(1.0, ck * z)) / (p + r);
            CHECK(std::abs(m.value - mu_cf(up, z, tol).value * mix) <= 2 * tol);
            cplx geo = (1 - q) / (1.0 - q * std::polar(1.0, z));
            CHECK(std::abs(mu_cf(up, z, tol).value - mu_cf(prm, zc, tol).value * geo) <= 2 * tol);
        }
    }
}

TEST_CASE("weak limit along k", "[analysis]") {
    auto base = P(RationalC{2, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), 0);
    double prev = 1e9;
    for (int k : {5, 10, 20}) {
        double dev = 0;
        for (double z : grid21())
            dev = std::max(dev, std::abs(mu_cf(with_k(base, k), z).value - limit_cf(base, z).value));
        CHECK(dev < prev);
        prev = dev;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("symmetrization", "[analysis]") {
    const double tol = 1e-10;
    for (const auto& prm : coarse_sets())
        for (auto t : {Target::Rho, Target::Mu})
            for (double z : grid21()) {
                auto a = sym_cf(prm, z, tol, t);
                auto b = sym_cf(swapped(prm), z, tol, t);
                CHECK(std::fabs(a.value - b.value) <= 2 * tol);
                CHECK(a.value >= 0);
                CHECK(a.value <= 1 + 2 * tol);
            }
    auto prm = coarse_sets()[2];
    CHECK(sym_cf(prm, 0, 1e-10, Target::Mu).value == 1);
    auto eq = P(RationalC{2, 1}, mpq_class(1, 4), mpq_class(1, 2), mpq_class(1, 4), 1);
    CHECK(sym_cf(eq, 2 * std::numbers::pi, 1e-10, Target::Rho).value < 1e-28);
    CHECK(sym_cf(eq, 2 * std::numbers::pi, 1e-10, Target::Mu).value < 1e-20);
}

TEST_CASE("entropy of the factor", "[analysis]") {
    auto third = P(RationalC{2, 1}, mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3), 1);
    CHECK_THAT(entropy_rho(third), WithinAbs(1.5 * std::log(3.0), 1e-12));
    CHECK(entropy_rho(P(RationalC{2, 1}, mpq_class(0), mpq_class(0), mpq_class(1), 0)) == 0);
    // frozen values from an independent 30-digit explicit summation
    CHECK_THAT(entropy_rho(with_k(third, -1)), WithinAbs(1.46731678111802662626, 1e-12));
    CHECK_THAT(entropy_rho(P(RationalC{6, 1}, mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3), 0)),
               WithinAbs(1.27302833658962563690, 1e-12));
    CHECK_THAT(entropy_rho(P(RationalC{3, 1}, mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5), -1)),
               WithinAbs(1.39902333478988146435, 1e-12));
}

TEST_CASE("entropy against explicit atoms", "[analysis][oracle]") {
    const std::vector<CBase> cs = {RationalC{2, 1}, RationalC{3, 2}, RationalRootC{2, 1, 2}, RationalC{3, 1}};
    for (const auto& c : cs)
        for (int k = -2; k <= 2; ++k)
            for (auto [a, b] : {std::pair{1, 1}, {2, 5}, {5, 2}, {3, 3}, {1, 7}}) {
                mpq_class p(a, 10), r(b, 10), q = 1 - p - r;
                p.canonicalize();
                r.canonicalize();
                auto prm = P(c, p, q, r, k);
                auto d = rational_c_power(c, -k);
                bool integral = d && is_natural(*d);
                double dv = static_cast<double>(c_pow(c, -k));
                double ref = brute_entropy(a / 10.0, 1 - (a + b) / 10.0, b / 10.0, dv, integral);
                INFO(describe(prm));
                CHECK_THAT(static_cast<double>(entropy_rho(prm)), WithinAbs(ref, 1e-10));
                if (!integral) CHECK_THAT(static_cast<double>(entropy_rho(prm)), WithinAbs(eq_entropy(a / 10.0, 1 - (a + b) / 10.0, b / 10.0), 1e-10));
                if (integral && k <= 0) CHECK(entropy_rho(prm) < entropy_rho(with_k(prm, 1)));
            }
}

TEST_CASE("continuity screens", "[analysis]") {
    CHECK(assess_continuity(P(RationalC{2, 1}, mpq_class(0), mpq_class(0), mpq_class(1), 3)).verdict ==
          ContinuityVerdict::Dirac);
    auto six = assess_continuity(P(RationalC{6, 1}, mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3), 1));
    CHECK(six.verdict == ContinuityVerdict::ContinuousSingular);
    CHECK_THAT(six.singularity_margin, WithinAbs(std::log(6.0) - 1.5 * std::log(3.0), 1e-12));
    auto two = assess_continuity(P(RationalC{2, 1}, mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3), 1));
    CHECK(two.verdict == ContinuityVerdict::Undetermined);
    CHECK(two.dim_bound == 1);
    for (const auto& prm : coarse_sets()) {
        auto a = assess_continuity(prm);
        if (a.verdict == ContinuityVerdict::ContinuousSingular) CHECK((a.dim_bound < 1 || a.singularity_margin > 0));
        CHECK_THAT(a.sym_dim_bound, WithinAbs(std::min(1.0, 2 * a.entropy / static_cast<double>(log_c(prm.c))), 1e-15));
    }
}

TEST_CASE("merge deficit against explicit atoms", "[analysis][oracle]") {
    for (auto [c, k] : {std::pair{CBase{RationalC{2, 1}}, -1}, {CBase{RationalC{2, 1}}, -2}, {CBase{RationalC{3, 1}}, -1},
                        {CBase{RationalRootC{2, 1, 2}}, -2}})
        for (auto [p, q, r] : {std::tuple{mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3)},
                               {mpq_class(1, 2), mpq_class(3, 10), mpq_class(1, 5)},
                               {mpq_class(1, 10), mpq_class(3, 5), mpq_class(3, 10)}}) {
            auto prm = P(c, p, q, r, k);
            const double d = static_cast<double>(c_pow(c, -k));
            const double pd = p.get_d(), qd = q.get_d(), rd = r.get_d();
            double deficit = brute_entropy(pd, qd, rd, d, false) - brute_entropy(pd, qd, rd, d, true);
            INFO(describe(prm));
            CHECK_THAT(static_cast<double>(entropy_merge_deficit(prm)), WithinAbs(deficit, 1e-12));
            CHECK(entropy_merge_deficit(prm) > 0);
            CHECK_THAT(static_cast<double>(entropy_rho(prm)), WithinAbs(eq_entropy(pd, qd, rd) - deficit, 1e-12));
        }
    CHECK(entropy_merge_deficit(P(RationalC{2, 1}, mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3), 1)) == 0);
    CHECK(entropy_merge_deficit(P(RationalC{3, 2}, mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3), -1)) == 0);
    auto far = P(RationalC{3, 1}, mpq_class(1, 10), mpq_class(1, 5), mpq_class(7, 10), -3);
    CHECK(entropy_merge_deficit(far) > 0);
    CHECK(entropy_merge_deficit(far) < 1e-15);
}
