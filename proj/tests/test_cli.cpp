#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "holdtime/asymptotics.hpp"
#include "holdtime/chain.hpp"

using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    std::string cmd = env + (env.empty() ? "" : " ") + HOLDTIME_CLI + std::string(" ") + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string spec(const char* name) { return std::string(SPEC_DIR) + "/" + name; }

// Second CSV row, first `col` fields skipped.
double csv_field(const std::string& csv, std::size_t row, std::size_t col) {
    std::istringstream in(csv);
    std::string line;
    for (std::size_t k = 0; k <= row; ++k) std::getline(in, line);
    std::istringstream fields(line);
    std::string f;
    for (std::size_t k = 0; k <= col; ++k) std::getline(fields, f, ',');
    return std::stod(f);
}

}  // namespace

TEST_CASE("analyze: transient walk") {
    auto r = run("analyze " + spec("transient_walk.json"));
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    CHECK(doc["classification"] == "transient");
    CHECK(doc["limit"]["p_origin"].get<double>() == doctest::Approx(0.46212).epsilon(1e-4));
}

TEST_CASE("analyze: single interior state") {
    auto r = run("analyze " + spec("single.json"));
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    CHECK(doc["classification"] == "recurrent");
    auto sol = holdtime::solve_phi(holdtime::load_spec(spec("single.json")));
    CHECK(doc["phi"]["phi"].get<double>() == doctest::Approx(sol.phi).epsilon(1e-12));
    CHECK(doc["phi"]["kappa"].get<double>() == doctest::Approx(sol.kappa).epsilon(1e-10));
    CHECK(doc["phi"].contains("tolerance"));
    CHECK(doc["decay"].contains("mu_C"));
}

TEST_CASE("input errors exit 1 with a JSON body") {
    for (const char* name : {"invalid.json", "malformed.json", "missing.json"}) {
        auto r = run("analyze " + spec(name));
        CHECK(r.code == 1);
        auto doc = json::parse(r.out);
        CHECK(doc.contains("error"));
    }
    auto bad = run("analyze " + spec("invalid.json"));
    CHECK(json::parse(bad.out).contains("violations"));
    CHECK(run("no-such-command").code == 1);
    CHECK(run("coin --p 1.5 --k 2").code == 1);
}

TEST_CASE("coin and poisson") {
    auto r = run("coin --p 0.5 --k 2");
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    CHECK(doc["s_k"].get<double>() == doctest::Approx((1.0 + std::sqrt(5.0)) / 4.0).epsilon(1e-12));

    auto table = run("coin --p 0.5 --k 3 --n 6");
    REQUIRE(table.code == 0);
    CHECK(table.out.rfind("n,exact,asymptote,rel_error\n", 0) == 0);
    CHECK(csv_field(table.out, 1, 1) == 1.0);  // n = 0 < k
    CHECK(csv_field(table.out, 3, 1) == 1.0);  // n = 2 < k

    auto p = run("poisson --r 1");
    REQUIRE(p.code == 0);
    auto pd = json::parse(p.out);
    CHECK(pd["phi"].get<double>() == 1.0);
    CHECK(pd["c"].get<double>() == 2.0);
}

TEST_CASE("renewal curve") {
    auto r = run("renewal " + spec("single.json") + " --t-max 2 --dt 0.01");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("t,s,scaled_s\n", 0) == 0);
    CHECK(csv_field(r.out, 1, 1) == doctest::Approx(1.0));
    CHECK(run("renewal " + spec("single.json") + " --dt 0.3").code == 1);
}

TEST_CASE("simulate is deterministic and ignores the worker count") {
    const std::string args = "simulate " + spec("four_state.json") + " --n-paths 4000 --horizon 5 --seed 9";
    auto a = run(args + " --threads 1");
    auto b = run(args + " --threads 6");
    auto c = run(args, "HOLDTIME_THREADS=3");
    REQUIRE(a.code == 0);
    CHECK(a.out.rfind("t,estimate,stderr,n_paths,seed\n", 0) == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
}

TEST_CASE("simulate compare on the single interior state") {
    auto r = run("simulate " + spec("single.json") + " --mode compare --horizon 15 --window 3 --n-paths 100000");
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    CHECK(doc["max_z"].get<double>() <= 3.0);
    CHECK(doc["p_value"].get<double>() > 0.01);
    auto infeasible = run("simulate " + spec("single.json") + " --mode rejection --horizon 60 --n-paths 2000");
    CHECK(infeasible.code == 3);
    CHECK(json::parse(infeasible.out).contains("acceptance_rate"));
}

TEST_CASE("condition") {
    auto vague = run("condition " + spec("four_state.json") + " --mode vague");
    REQUIRE(vague.code == 0);
    CHECK(json::parse(vague.out)["hazard"]["type"] == "theorem36");
    auto lim = run("condition " + spec("single.json") + " --mode limit");
    REQUIRE(lim.code == 0);
    CHECK(json::parse(lim.out)["honest"] == true);
    auto refused = run("condition " + spec("single.json") + " --mode hlambda --lambda 1");
    CHECK(refused.code == 1);
    auto sub = run("condition " + spec("equal_decreasing.json") + " --mode subexp");
    REQUIRE(sub.code == 0);
    CHECK(json::parse(sub.out)["honest"] == true);
}

TEST_CASE("tails") {
    auto same = run("tails " + spec("single.json") + " --i 0:0.5 --j 0:0.5 --v 0 --t 3 --n-paths 500");
    REQUIRE(same.code == 0);
    CHECK(csv_field(same.out, 1, 1) == 1.0);
    // Origin clock ratio on a heavy-tailed walk drifts to (1 - e^{-q0 (1 - u)}) / (1 - e^{-q0}).
    auto heavy =
        run("tails " + spec("equal_decreasing.json") + " --i 0:0.5 --j 0 --v 0 --t 200 --n-paths 20000");
    REQUIRE(heavy.code == 0);
    const double target = (1.0 - std::exp(-0.5)) / (1.0 - std::exp(-1.0));
    CHECK(std::abs(csv_field(heavy.out, 1, 1) - target) < 0.1 * target);
}

TEST_CASE("diagnose-subexp") {
    auto r = run("diagnose-subexp " + spec("single.json") + " --n-samples 20000 --horizon 100 --points 30");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("t,ratio,tail_count\n", 0) == 0);
}

TEST_CASE("help lists defaults") {
    auto r = run("simulate --help");
    CHECK(r.code == 0);
    CHECK(r.out.find("100000") != std::string::npos);
    CHECK(run("--help").out.find("--threads") != std::string::npos);
    auto d = run("diagnose-subexp --help");
    CHECK(d.out.find("0.25") != std::string::npos);
}
