#pragma once

#include "analysis.hpp"
#include "classify.hpp"
#include "io.hpp"
#include "params.hpp"
#include "qlevy.hpp"
#include "sampler.hpp"
#include "verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qidiv::cli {

enum Exit { Ok = 0, Internal = 1, Usage = 2, Undecided = 3 };

inline constexpr const char* output_dir_env = "QIDIV_OUTPUT_DIR";
inline constexpr int k0_window = 16;

struct ZGrid {
    double lo = -10, hi = 10;
    int count = 21;
};

// "lo..hi:count"
inline ZGrid parse_z(const std::string& s) {
    auto dots = s.find("..");
    auto colon = s.rfind(':');
    if (dots == std::string::npos || colon == std::string::npos || colon < dots)
        throw ParamError(ParamError::Code::Parse, "expected --z lo..hi:count, got " + s);
    try {
        ZGrid g{std::stod(s.substr(0, dots)), std::stod(s.substr(dots + 2, colon - dots - 2)),
                std::stoi(s.substr(colon + 1))};
        if (g.count < 1 || !(g.lo <= g.hi)) throw std::invalid_argument("range");
        return g;
    } catch (const std::exception&) {
        throw ParamError(ParamError::Code::Parse, "expected --z lo..hi:count, got " + s);
    }
}

// "a..b"
inline std::pair<int, int> parse_k_range(const std::string& s) {
    auto dots = s.find("..");
    try {
        if (dots == std::string::npos) throw std::invalid_argument("no dots");
        std::size_t used = 0;
        std::string a = s.substr(0, dots), b = s.substr(dots + 2);
        int lo = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument("a");
        int hi = std::stoi(b, &used);
        if (used != b.size() || lo > hi) throw std::invalid_argument("b");
        return {lo, hi};
    } catch (const std::exception&) {
        throw ParamError(ParamError::Code::Parse, "expected a k range a..b with a <= b, got " + s);
    }
}

// "1/20" -> 20
inline int parse_grid(const std::string& s) {
    mpq_class step = parse_rational(s);
    if (sgn(step) <= 0 || step.get_num() != 1 || step.get_den() > 1000)
        throw ParamError(ParamError::Code::Parse, "grid step must be 1/n with 1 <= n <= 1000, got " + s);
    return static_cast<int>(step.get_den().get_si());
}

inline std::vector<CBase> parse_c_set(const std::string& s) {
    if (s == "default") return default_c_set();
    std::vector<CBase> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_c(item));
    if (out.empty()) throw ParamError(ParamError::Code::Parse, "empty c-set");
    return out;
}

inline std::filesystem::path resolve_output(const std::string& out) {
    std::filesystem::path p(out);
    if (p.is_relative()) {
        if (const char* dir = std::getenv(output_dir_env); dir && *dir) p = std::filesystem::path(dir) / p;
    }
    return p;
}

class Output {
public:
    Output(const std::string& out, std::ostream& fallback) : os_(&fallback) {
        if (out.empty()) return;
        path_ = resolve_output(out);
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        file_.open(path_);
        if (!file_) throw ParamError(ParamError::Code::Parse, "cannot write " + path_.string());
        os_ = &file_;
    }
    std::ostream& stream() { return *os_; }
    const std::filesystem::path& path() const { return path_; }
    bool to_file() const { return !path_.empty(); }

private:
    std::ofstream file_;
    std::filesystem::path path_;
    std::ostream* os_;
};

struct ParamFlags {
    std::string c, p, q, r;
    long long k = 0;
    int k_guard = default_k_guard;

    void attach(CLI::App* app, bool with_k = true) {
        app->add_option("--c", c, "scale c > 1: 2, 3/2, 1.5, 2^(1/2), (3/2)^(1/3), generic:<decimal>")->required();
        app->add_option("--p", p, "probability p (a/b or decimal)")->required();
        app->add_option("--q", q, "probability q")->required();
        app->add_option("--r", r, "probability r")->required();
        if (with_k) app->add_option("--k", k, "shift index k")->required();
        app->add_option("--k-guard", k_guard, "reject |k| above this (0 disables)")->capture_default_str();
    }
    ModelParams params() const { return validate(RawParams{c, p, q, r, k}, k_guard); }
};

inline std::optional<int> find_k0(const ModelParams& prm, int lo, int hi) {
    for (int k = lo; k <= hi; ++k) {
        try {
            if (classify_mu(with_k(prm, k)).cls == DivisibilityClass::ID) return k;
        } catch (const BoundaryUndecided&) {
        }
    }
    return std::nullopt;
}

inline Target parse_target(const std::string& s) {
    if (s == "rho") return Target::Rho;
    if (s == "mu") return Target::Mu;
    throw ParamError(ParamError::Code::Parse, "target must be rho or mu");
}

inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"qidiv: divisibility classes, quasi-Levy measures and samplers for the three-atom OU model"};
    app.require_subcommand(1);
    std::string format, out_path;
    unsigned workers = 1;

    auto common = [&](CLI::App* sub, std::vector<std::string> formats) {
        sub->add_option("--format", format, "output format")->check(CLI::IsMember(formats));
        sub->add_option("--out", out_path, "output file (relative paths resolve against $QIDIV_OUTPUT_DIR)");
    };

    ParamFlags pf;
    int N = 40, M = 400;
    double tol = 1e-12;
    std::string target_s = "mu", z_s = "-10..10:21", k_range_s = "-3..3", c_set_s = "default", grid_s = "1/20";
    std::string source_s = "series";
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    int depth = 0, steps = 20;
    double horizon = 0, horizon_tol = 1e-6;
    bool sym = false, oracle = false;

    auto* classify_cmd = app.add_subcommand("classify", "ID / ID0 / ID00 verdicts for rho, mu and symmetrizations");
    pf.attach(classify_cmd);

    auto* qlevy_cmd = app.add_subcommand("qlevy", "truncated quasi-Levy measure with exact atom weights");
    qlevy_cmd->add_option("--target", target_s, "rho or mu")->capture_default_str();
    qlevy_cmd->add_option("--N", N, "level truncation")->capture_default_str()->check(CLI::Range(0, 100000));
    qlevy_cmd->add_option("--M", M, "index truncation")->capture_default_str()->check(CLI::Range(1, 100000));
    qlevy_cmd->add_flag("--oracle", oracle, "print the certified sign verdict instead of the atoms");

    auto* cf_cmd = app.add_subcommand("cf", "characteristic function trace");
    cf_cmd->add_option("--target", target_s, "rho or mu")->capture_default_str();
    cf_cmd->add_option("--z", z_s, "grid lo..hi:count")->capture_default_str();
    cf_cmd->add_option("--tol", tol, "product truncation tolerance")->capture_default_str()->check(
        CLI::PositiveNumber);
    cf_cmd->add_flag("--sym", sym, "output |cf|^2 (im column is 0)");

    auto* entropy_cmd = app.add_subcommand("entropy", "entropy of rho, dimension bounds, continuity screens");

    auto* sample_cmd = app.add_subcommand("sample", "draw samples");
    sample_cmd->add_option("--source", source_s, "rho, series, ar1 or integral")
        ->check(CLI::IsMember({"rho", "series", "ar1", "integral"}))
        ->capture_default_str();
    sample_cmd->add_option("--n", n, "sample count")->capture_default_str()->check(CLI::Range(1, 100000000));
    sample_cmd->add_option("--seed", seed, "64-bit seed")->capture_default_str();
    sample_cmd->add_option("--depth", depth, "series depth (0 = automatic)")->capture_default_str();
    sample_cmd->add_option("--steps", steps, "AR(1) steps")->capture_default_str()->check(CLI::Range(1, 100000));
    sample_cmd->add_option("--horizon", horizon, "time horizon for integral (0 = automatic)")->capture_default_str();
    sample_cmd->add_option("--horizon-tol", horizon_tol, "allowed expected residual")->capture_default_str();

    auto* verify_cmd = app.add_subcommand("verify", "oracle vs classifier sweep");
    verify_cmd->add_option("--c-set", c_set_s, "default or a comma-separated list of c")->capture_default_str();
    verify_cmd->add_option("--k", k_range_s, "k range a..b")->capture_default_str();
    verify_cmd->add_option("--grid", grid_s, "simplex step 1/n")->capture_default_str();
    verify_cmd->add_option("--N", N, "level truncation")->capture_default_str()->check(CLI::Range(0, 100000));
    verify_cmd->add_option("--M", M, "index truncation")->capture_default_str()->check(CLI::Range(1, 100000));

    auto* scan_cmd = app.add_subcommand("scan", "verdicts along a k range");
    scan_cmd->add_option("--k", k_range_s, "k range a..b")->capture_default_str();

    for (auto* sub : {qlevy_cmd, cf_cmd, entropy_cmd, sample_cmd}) pf.attach(sub);
    pf.attach(scan_cmd, false);
    common(classify_cmd, {"json", "text"});
    common(qlevy_cmd, {"csv", "json", "text"});
    common(cf_cmd, {"csv", "json"});
    common(entropy_cmd, {"json", "text"});
    common(sample_cmd, {"csv", "json"});
    common(verify_cmd, {"json", "text"});
    common(scan_cmd, {"json", "csv", "text"});
    for (auto* sub : {classify_cmd, qlevy_cmd, cf_cmd, entropy_cmd, sample_cmd, verify_cmd, scan_cmd})
        sub->add_option("--workers", workers, "worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return Usage;
    }
    if (format.empty()) {
        if (classify_cmd->parsed()) format = "json";
        else if (qlevy_cmd->parsed() || cf_cmd->parsed() || sample_cmd->parsed()) format = "csv";
        else format = "text";
    }

    try {
        if (classify_cmd->parsed()) {
            auto prm = pf.params();
            auto rep = classify(prm);
            auto k0 = find_k0(prm, -k0_window, k0_window);
            Output o(out_path, out);
            if (format == "json") o.stream() << io::report_json(rep, k0).dump(2) << '\n';
            else io::write_report_text(o.stream(), rep, k0);
            return Ok;
        }
        if (qlevy_cmd->parsed()) {
            auto prm = pf.params();
            Target t = parse_target(target_s);
            Output o(out_path, out);
            if (oracle) {
                auto v = oracle_classify(prm, t, N, M);
                if (format == "json") o.stream() << io::sign_verdict_json(v).dump(2) << '\n';
                else o.stream() << io::sign_verdict_json(v).dump() << '\n';
                return Ok;
            }
            auto nu = build_qlevy(prm, t, N, M);
            if (format == "json") o.stream() << io::qlevy_json(nu, prm.c).dump(2) << '\n';
            else io::write_qlevy_csv(o.stream(), nu, prm.c);
            return Ok;
        }
        if (cf_cmd->parsed()) {
            auto prm = pf.params();
            Target t = parse_target(target_s);
            ZGrid g = parse_z(z_s);
            auto zs = linear_grid(g.lo, g.hi, g.count);
            CFTrace tr;
            if (sym) {
                tr.z_grid = zs;
                for (double z : zs) {
                    auto s = sym_cf(prm, z, tol, t);
                    tr.values.emplace_back(s.value, 0.0);
                    tr.error_bound.push_back(s.error_bound);
                }
            } else {
                tr = t == Target::Mu ? mu_cf_trace(prm, zs, tol) : rho_cf_trace(prm, zs);
            }
            Output o(out_path, out);
            if (format == "json") o.stream() << io::cf_json(tr).dump(2) << '\n';
            else io::write_cf_csv(o.stream(), tr);
            return Ok;
        }
        if (entropy_cmd->parsed()) {
            auto prm = pf.params();
            auto a = assess_continuity(prm);
            Output o(out_path, out);
            if (format == "json") {
                o.stream() << io::json{{"params", io::params_json(prm)},
                                       {"entropy", a.entropy},
                                       {"dim_bound", a.dim_bound},
                                       {"sym_dim_bound", a.sym_dim_bound},
                                       {"singularity_margin", a.singularity_margin},
                                       {"verdict", to_string(a.verdict)}}
                                  .dump(2)
                           << '\n';
            } else {
                o.stream() << "entropy " << io::decimal(a.entropy) << "\ndim_bound " << io::decimal(a.dim_bound)
                           << "\nsym_dim_bound " << io::decimal(a.sym_dim_bound) << "\nsingularity_margin "
                           << io::decimal(a.singularity_margin) << "\nverdict " << to_string(a.verdict) << '\n';
            }
            return Ok;
        }
        if (sample_cmd->parsed()) {
            auto prm = pf.params();
            SampleBatch b;
            if (source_s == "rho") {
                b = sample_rho(prm, n, seed, workers);
            } else if (source_s == "series") {
                b = sample_mu(prm, n, seed, depth, workers);
            } else if (source_s == "ar1") {
                b = sample_mu_ar1(prm, n, seed, steps, depth, workers);
            } else {
                double T = horizon > 0 ? horizon : default_horizon(prm, horizon_tol);
                b = simulate_integral(prm, n, seed, T, horizon_tol, workers);
            }
            Output o(out_path, out);
            if (format == "json") {
                auto j = io::sample_sidecar(b);
                j["values"] = b.values;
                o.stream() << j.dump() << '\n';
                return Ok;
            }
            io::write_samples_csv(o.stream(), b);
            if (o.to_file()) {
                std::ofstream side(o.path().string() + ".json");
                side << io::sample_sidecar(b).dump(2) << '\n';
            } else {
                err << io::sample_sidecar(b).dump() << '\n';
            }
            return Ok;
        }
        if (verify_cmd->parsed()) {
            SweepOptions opt;
            opt.cs = parse_c_set(c_set_s);
            std::tie(opt.k_from, opt.k_to) = parse_k_range(k_range_s);
            opt.grid_den = parse_grid(grid_s);
            opt.N = N;
            opt.M = M;
            opt.workers = workers;
            auto res = run_sweep(opt);
            Output o(out_path, out);
            if (format == "json") {
                io::json dis = io::json::array();
                for (const auto& rec : res.records) {
                    if (!rec.rho_disagree && !rec.mu_disagree) continue;
                    dis.push_back(io::json{{"params", io::params_json(rec.params)},
                                           {"rho", rec.rho ? to_string(*rec.rho) : "undecided"},
                                           {"rho_oracle", to_string(rec.rho_oracle)},
                                           {"mu", rec.mu ? to_string(*rec.mu) : "undecided"},
                                           {"mu_oracle", to_string(rec.mu_oracle)}});
                }
                o.stream() << io::json{{"summary", res.summary()},
                                       {"comparisons", res.comparisons},
                                       {"certified", res.certified},
                                       {"agreements", res.agreements},
                                       {"disagreements", res.disagreements},
                                       {"uncertified", res.uncertified},
                                       {"undecided", res.undecided},
                                       {"disagreeing", dis}}
                                  .dump(2)
                           << '\n';
            } else {
                o.stream() << res.summary() << '\n';
            }
            return res.disagreements == 0 ? Ok : Internal;
        }
        if (scan_cmd->parsed()) {
            auto [lo, hi] = parse_k_range(k_range_s);
            pf.k = lo;
            auto base = pf.params();
            validate(with_k(base, hi), pf.k_guard);
            auto sr = scan_k(base, lo, hi);
            Output o(out_path, out);
            if (format == "json") {
                io::json rows = io::json::array();
                for (const auto& rep : sr.reports) rows.push_back(io::report_json(rep, std::nullopt));
                o.stream() << io::json{{"reports", rows},
                                       {"k0", sr.k0 ? io::json(*sr.k0) : io::json(nullptr)},
                                       {"k0_sym", sr.k0_sym ? io::json(*sr.k0_sym) : io::json(nullptr)}}
                                  .dump(2)
                           << '\n';
            } else {
                const char* sep = format == "csv" ? "," : " ";
                o.stream() << "k" << sep << "rho" << sep << "mu" << sep << "rho_sym" << sep << "mu_sym\n";
                for (const auto& rep : sr.reports)
                    o.stream() << rep.params.k << sep << to_string(rep.rho.cls) << sep << to_string(rep.mu.cls) << sep
                               << to_string(rep.rho_sym.cls) << sep << to_string(rep.mu_sym.cls) << '\n';
                if (format == "text")
                    o.stream() << "k0 " << (sr.k0 ? std::to_string(*sr.k0) : "none") << "\nk0_sym "
                               << (sr.k0_sym ? std::to_string(*sr.k0_sym) : "none") << '\n';
            }
            return Ok;
        }
    } catch (const ParamError& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return Usage;
    } catch (const NotQuasiID& e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const HorizonTooSmall& e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const Inconclusive& e) {
        err << "inconclusive: " << e.what() << " (try --N " << e.suggested_N << " --M " << e.suggested_M << ")\n";
        return Undecided;
    } catch (const BoundaryUndecided& e) {
        err << "undecided: " << e.what() << '\n';
        return Undecided;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return Internal;
    }
    return Usage;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(std::move(args));
}

}  // namespace qidiv::cli
