#include <catch_amalgamated.hpp>

#include <qidiv/cli.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qidiv;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) v.push_back(l);
    return v;
}

}  // namespace

TEST_CASE("classify emits a JSON report that round-trips", "[cli]") {
    auto r = run({"classify", "--c", "2", "--p", "1/2", "--q", "3/10", "--r", "1/5", "--k", "1", "--format", "json"});
    REQUIRE(r.code == 0);
    auto j = io::json::parse(r.out);
    CHECK(j["verdicts"]["mu"]["class"] == "ID");
    CHECK(j["verdicts"]["rho"]["class"] == "ID");
    CHECK(j["k0"] == 1);
    for (const char* key : {"rho", "mu", "rho_sym", "mu_sym"}) {
        CHECK(j["verdicts"][key].contains("theorem"));
        CHECK(j["verdicts"][key].contains("values"));
    }
    CHECK(j["params"]["p"] == "1/2");
    auto back = io::params_from_json(j["params"]);
    CHECK(back == validate(RawParams{"2", "1/2", "3/10", "1/5", 1}));
}

TEST_CASE("round trip over many parameter sets", "[cli][property]") {
    for (const char* c : {"2", "3/2", "2^(1/2)", "(3/2)^(1/3)", "generic:3.14159"})
        for (int k = -2; k <= 2; ++k)
            for (auto [p, q, r] : {std::tuple{"0.69", "3/10", "1/100"}, {"1/5", "3/10", "1/2"}, {"1/3", "1/3", "1/3"}}) {
                auto prm = validate(RawParams{c, p, q, r, k});
                auto rep = classify(prm);
                auto text = io::report_json(rep, std::nullopt).dump();
                CHECK(io::params_from_json(io::json::parse(text)["params"]) == prm);
            }
}

TEST_CASE("text classification", "[cli]") {
    auto r = run({"classify", "--c", "3", "--p", "1/2", "--q", "3/10", "--r", "1/5", "--k", "1", "--format", "text"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("mu: ID0") != std::string::npos);
}

TEST_CASE("validation and usage errors exit 2", "[cli]") {
    CHECK(run({"classify", "--c", "1", "--p", "1/2", "--q", "1/4", "--r", "1/4", "--k", "0"}).code == 2);
    CHECK(run({"classify", "--c", "2", "--p", "1/2", "--q", "1/2", "--r", "1/4", "--k", "0"}).code == 2);
    CHECK(run({"classify", "--c", "2", "--p", "1", "--q", "0", "--r", "0", "--k", "0"}).code == 2);
    CHECK(run({"classify", "--c", "2", "--p", "1/2", "--q", "1/4", "--r", "1/4", "--k", "99"}).code == 2);
    CHECK(run({"classify", "--c", "2", "--p", "1/2"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"cf", "--c", "2", "--p", "1/2", "--q", "1/4", "--r", "1/4", "--k", "0", "--z", "abc"}).code == 2);
    CHECK(run({"verify", "--grid", "2/7"}).code == 2);
    CHECK(run({"qlevy", "--c", "2", "--p", "1/4", "--q", "1/2", "--r", "1/4", "--k", "0"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cf trace CSV", "[cli]") {
    auto r = run({"cf", "--c", "3/2", "--p", "69/100", "--q", "3/10", "--r", "1/100", "--k", "-1", "--z", "-10..10:21",
                  "--tol", "1e-10"});
    REQUIRE(r.code == 0);
    auto ls = lines(r.out);
    REQUIRE(ls.size() == 22);
    CHECK(ls[0] == "z,re,im,error_bound");
    CHECK(ls[11] == "0,1,0,0");
}

TEST_CASE("qlevy CSV and oracle", "[cli]") {
    auto r = run({"qlevy", "--c", "2", "--p", "3/5", "--q", "3/10", "--r", "1/10", "--k", "-1", "--target", "rho", "--M",
                  "4"});
    REQUIRE(r.code == 0);
    auto ls = lines(r.out);
    REQUIRE(ls.size() >= 3);
    CHECK(ls[0].rfind("# target=rho N=0 M=4 tail_bound=", 0) == 0);
    CHECK(ls[1] == "position_exact,position_decimal,weight_exact,weight_decimal");
    CHECK(ls[2] == "1*c^0,1,3/10,0.3");

    auto o = run({"qlevy", "--c", "3", "--p", "1/2", "--q", "3/10", "--r", "1/5", "--k", "1", "--oracle", "--format",
                  "json"});
    REQUIRE(o.code == 0);
    CHECK(io::json::parse(o.out)["verdict"] == "NegativeAtom");

    auto u = run({"qlevy", "--c", "3/2", "--p", "3/10", "--q", "3/5", "--r", "1/10", "--k", "-1", "--target", "rho",
                  "--oracle"});
    CHECK(u.code == 3);
}

TEST_CASE("scan and entropy", "[cli]") {
    auto s = run({"scan", "--c", "2", "--p", "1/2", "--q", "3/10", "--r", "1/5", "--k", "-2..2", "--format", "csv"});
    REQUIRE(s.code == 0);
    auto ls = lines(s.out);
    REQUIRE(ls.size() == 6);
    CHECK(ls[0] == "k,rho,mu,rho_sym,mu_sym");
    CHECK(ls[4] == "1,ID,ID,ID,ID");
    auto e = run({"entropy", "--c", "6", "--p", "1/3", "--q", "1/3", "--r", "1/3", "--k", "1", "--format", "json"});
    REQUIRE(e.code == 0);
    CHECK(io::json::parse(e.out)["verdict"] == "ContinuousSingular");
}

TEST_CASE("verify summary and exit status", "[cli]") {
    auto r = run({"verify", "--c-set", "2,3/2", "--k", "-1..1", "--grid", "1/6"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("agreement 100%, certified ", 0) == 0);
    CHECK(r.out.find("disagreements 0") != std::string::npos);
}

TEST_CASE("samples go to the output directory with a sidecar", "[cli]") {
    auto dir = std::filesystem::temp_directory_path() / "qidiv_cli_test";
    std::filesystem::remove_all(dir);
    ::setenv(cli::output_dir_env, dir.c_str(), 1);
    auto r = run({"sample", "--c", "2", "--p", "1/4", "--q", "0", "--r", "3/4", "--k", "1", "--n", "50", "--seed", "5",
                  "--out", "s/x.csv"});
    ::unsetenv(cli::output_dir_env);
    REQUIRE(r.code == 0);
    std::ifstream csv(dir / "s/x.csv"), side(dir / "s/x.csv.json");
    REQUIRE(csv);
    REQUIRE(side);
    std::stringstream buf;
    buf << csv.rdbuf();
    auto ls = lines(buf.str());
    CHECK(ls.size() == 51);
    CHECK(ls[0] == "x");
    auto meta = io::json::parse(side);
    CHECK(meta["seed"] == 5);
    CHECK(meta["n"] == 50);
    CHECK(meta["source"] == "series");
    CHECK(meta.contains("truncation_error"));
    std::filesystem::remove_all(dir);
}
