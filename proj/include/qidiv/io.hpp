#pragma once

#include "analysis.hpp"
#include "classify.hpp"
#include "params.hpp"
#include "qlevy.hpp"
#include "sampler.hpp"

#include <json.hpp>

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

namespace qidiv::io {

using json = nlohmann::ordered_json;

inline std::string decimal(long double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*Lg", digits, v);
    return buf;
}

inline json params_json(const ModelParams& m) {
    return json{{"c", format_c(m.c)},
                {"p", format_rational(m.p)},
                {"q", format_rational(m.q)},
                {"r", format_rational(m.r)},
                {"k", m.k}};
}

inline ModelParams params_from_json(const json& j, int k_guard = default_k_guard) {
    RawParams raw{j.at("c").get<std::string>(), j.at("p").get<std::string>(), j.at("q").get<std::string>(),
                  j.at("r").get<std::string>(), j.at("k").get<long long>()};
    return validate(raw, k_guard);
}

inline json verdict_json(const Verdict& v) {
    json values = json::object();
    for (const auto& nv : v.values) values[nv.name] = nv.value;
    return json{{"class", to_string(v.cls)}, {"theorem", v.rule}, {"values", values}};
}

inline json report_json(const ClassificationReport& rep, std::optional<int> k0) {
    json j;
    j["params"] = params_json(rep.params);
    j["verdicts"] = json{{"rho", verdict_json(rep.rho)},
                         {"mu", verdict_json(rep.mu)},
                         {"rho_sym", verdict_json(rep.rho_sym)},
                         {"mu_sym", verdict_json(rep.mu_sym)}};
    j["k0"] = k0 ? json(*k0) : json(nullptr);
    j["swapped_used"] = rep.swapped_used;
    return j;
}

inline void write_report_text(std::ostream& os, const ClassificationReport& rep, std::optional<int> k0) {
    os << describe(rep.params) << '\n';
    auto line = [&](const char* name, const Verdict& v) {
        os << name << ": " << to_string(v.cls) << "  [" << v.rule << "]";
        for (const auto& nv : v.values) os << "  " << nv.name << "=" << nv.value;
        os << '\n';
    };
    line("rho", rep.rho);
    line("mu", rep.mu);
    line("rho_sym", rep.rho_sym);
    line("mu_sym", rep.mu_sym);
    os << "k0: " << (k0 ? std::to_string(*k0) : std::string("none")) << '\n';
}

// Comment line with truncation and bounds, then position_exact,position_decimal,weight_exact,weight_decimal.
inline void write_qlevy_csv(std::ostream& os, const SignedAtomicMeasure& nu, const CBase& c) {
    os << "# target=" << (nu.target == Target::Mu ? "mu" : "rho") << " N=" << nu.N << " M=" << nu.M
       << " tail_bound=" << decimal(nu.tail_bound) << " tail_moment_bound=" << decimal(nu.tail_moment_bound)
       << " drift=" << decimal(nu.drift_value) << '\n';
    os << "position_exact,position_decimal,weight_exact,weight_decimal\n";
    for (const auto& a : nu.atoms)
        os << format_position(a.position) << ',' << decimal(position_value(c, a.position)) << ','
           << format_rational(a.weight) << ',' << decimal(to_long_double(a.weight)) << '\n';
}

inline json qlevy_json(const SignedAtomicMeasure& nu, const CBase& c) {
    json atoms = json::array();
    for (const auto& a : nu.atoms)
        atoms.push_back(json{{"position_exact", format_position(a.position)},
                             {"position_decimal", static_cast<double>(position_value(c, a.position))},
                             {"weight_exact", format_rational(a.weight)},
                             {"weight_decimal", static_cast<double>(to_long_double(a.weight))}});
    return json{{"target", nu.target == Target::Mu ? "mu" : "rho"},
                {"N", nu.N},
                {"M", nu.M},
                {"tail_bound", static_cast<double>(nu.tail_bound)},
                {"tail_moment_bound", static_cast<double>(nu.tail_moment_bound)},
                {"drift", static_cast<double>(nu.drift_value)},
                {"atoms", atoms}};
}

inline json sign_verdict_json(const SignVerdict& v) {
    if (const auto* n = std::get_if<NegativeAtom>(&v))
        return json{{"verdict", "NegativeAtom"},
                    {"position", format_position(n->position)},
                    {"weight", format_rational(n->weight)},
                    {"certified", n->certified}};
    return json{{"verdict", "AllNonnegative"}, {"certified", std::get<AllNonnegative>(v).certified}};
}

// z,re,im,error_bound
inline void write_cf_csv(std::ostream& os, const CFTrace& t) {
    os << "z,re,im,error_bound\n";
    for (std::size_t i = 0; i < t.z_grid.size(); ++i)
        os << decimal(t.z_grid[i]) << ',' << decimal(t.values[i].real()) << ',' << decimal(t.values[i].imag())
           << ',' << decimal(t.error_bound[i]) << '\n';
}

inline json cf_json(const CFTrace& t) {
    json rows = json::array();
    for (std::size_t i = 0; i < t.z_grid.size(); ++i)
        rows.push_back(json{{"z", t.z_grid[i]},
                            {"re", t.values[i].real()},
                            {"im", t.values[i].imag()},
                            {"error_bound", t.error_bound[i]}});
    return json{{"truncation_n", t.truncation_n}, {"points", rows}};
}

inline void write_samples_csv(std::ostream& os, const SampleBatch& b) {
    os << "x\n";
    for (double v : b.values) os << decimal(v) << '\n';
}

inline json sample_sidecar(const SampleBatch& b) {
    return json{{"seed", b.seed}, {"n", b.n}, {"truncation_error", b.truncation_error}, {"source", to_string(b.source)}};
}

}  // namespace qidiv::io
