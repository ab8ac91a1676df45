#pragma once

#include "classify.hpp"
#include "params.hpp"
#include "qlevy.hpp"

#include <array>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace qidiv {

enum class OracleOutcome { Nonnegative, Negative, Uncertified };

inline const char* to_string(OracleOutcome o) {
    switch (o) {
        case OracleOutcome::Nonnegative: return "AllNonnegative";
        case OracleOutcome::Negative: return "NegativeAtom";
        case OracleOutcome::Uncertified: return "Uncertified";
    }
    return "?";
}

struct SweepOptions {
    std::vector<CBase> cs;
    int k_from = -3, k_to = 3;
    int grid_den = 20;
    int N = 40, M = 400;
    unsigned workers = 1;
};

struct SweepRecord {
    ModelParams params;
    std::optional<DivisibilityClass> rho, mu, rho_sym, mu_sym;  // empty when undecided
    OracleOutcome rho_oracle = OracleOutcome::Uncertified, mu_oracle = OracleOutcome::Uncertified;
    bool rho_disagree = false, mu_disagree = false;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::size_t comparisons = 0, certified = 0, agreements = 0, disagreements = 0, uncertified = 0, undecided = 0;

    std::string summary() const {
        char buf[256];
        double pct = certified ? 100.0 * static_cast<double>(agreements) / static_cast<double>(certified) : 100.0;
        std::snprintf(buf, sizeof buf, "agreement %g%%, certified %zu, disagreements %zu (comparisons %zu, uncertified %zu, undecided %zu)",
                      pct, certified, disagreements, comparisons, uncertified, undecided);
        return buf;
    }
};

inline std::vector<CBase> default_c_set() {
    return {RationalC{2, 1}, RationalC{3, 1}, RationalC{5, 2}, RationalC{3, 2}, RationalRootC{2, 1, 2},
            RationalRootC{2, 1, 3}};
}

// (p, q, r) with p = i/den, r = j/den, p, r > 0, p != r.
inline std::vector<std::array<mpq_class, 3>> simplex_grid(int den) {
    std::vector<std::array<mpq_class, 3>> out;
    for (int i = 1; i < den; ++i)
        for (int j = 1; i + j <= den; ++j) {
            if (i == j) continue;
            mpq_class p(i, den), r(j, den);
            p.canonicalize();
            r.canonicalize();
            out.push_back({p, mpq_class(1 - p - r), r});
        }
    return out;
}

inline OracleOutcome oracle_outcome(const SignVerdict& v) {
    if (!certified(v)) return OracleOutcome::Uncertified;
    return std::holds_alternative<NegativeAtom>(v) ? OracleOutcome::Negative : OracleOutcome::Nonnegative;
}

inline bool disagrees(DivisibilityClass cls, OracleOutcome o) {
    if (o == OracleOutcome::Uncertified) return false;
    return (cls == DivisibilityClass::ID) != (o == OracleOutcome::Nonnegative);
}

inline SweepResult run_sweep(const SweepOptions& opt) {
    auto grid = simplex_grid(opt.grid_den);
    const std::size_t per_point = opt.cs.size() * static_cast<std::size_t>(opt.k_to - opt.k_from + 1);
    SweepResult res;
    res.records.resize(grid.size() * per_point);
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            std::size_t gi = cursor.fetch_add(1);
            if (gi >= grid.size()) return;
            const auto& [p, q, r] = grid[gi];
            std::size_t slot = gi * per_point;
            std::optional<WeightTable> table;
            for (const auto& c : opt.cs) {
                for (int k = opt.k_from; k <= opt.k_to; ++k, ++slot) {
                    SweepRecord rec;
                    rec.params = validate(c, p, q, r, k);
                    if (!table) table.emplace(make_weight_table(rec.params, opt.M));
                    rec.rho = classify_rho(rec.params).cls;
                    try {
                        rec.mu = classify_mu(rec.params).cls;
                    } catch (const BoundaryUndecided&) {
                    }
                    try {
                        auto [rs, ms] = classify_sym(rec.params);
                        rec.rho_sym = rs.cls;
                        rec.mu_sym = ms.cls;
                    } catch (const BoundaryUndecided&) {
                    }
                    rec.rho_oracle = oracle_outcome(oracle_scan(rec.params, Target::Rho, opt.N, opt.M, &*table));
                    rec.mu_oracle = oracle_outcome(oracle_scan(rec.params, Target::Mu, opt.N, opt.M, &*table));
                    rec.rho_disagree = rec.rho && disagrees(*rec.rho, rec.rho_oracle);
                    rec.mu_disagree = rec.mu && disagrees(*rec.mu, rec.mu_oracle);
                    res.records[slot] = std::move(rec);
                }
            }
        }
    };
    unsigned workers = std::max(1u, opt.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& rec : res.records) {
        for (int which = 0; which < 2; ++which) {
            const auto& cls = which == 0 ? rec.rho : rec.mu;
            auto o = which == 0 ? rec.rho_oracle : rec.mu_oracle;
            ++res.comparisons;
            if (!cls) {
                ++res.undecided;
                continue;
            }
            if (o == OracleOutcome::Uncertified) {
                ++res.uncertified;
                continue;
            }
            ++res.certified;
            if (disagrees(*cls, o)) ++res.disagreements;
            else ++res.agreements;
        }
    }
    return res;
}

}  // namespace qidiv
