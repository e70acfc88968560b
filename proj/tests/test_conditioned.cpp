#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "holdtime/asymptotics.hpp"
#include "holdtime/conditioned.hpp"
#include "holdtime/errors.hpp"
#include "holdtime/hitting.hpp"

using namespace holdtime;

namespace {

double exit_sum(const ConditionedChain& c) {
    double s = 0.0;
    for (double e : c.exit_probs) s += e;
    return s;
}

}  // namespace

TEST_CASE("limit chain of the transient walk") {
    auto spec = fixtures::transient_walk(60);
    auto p = limit_vector_transient(spec, analyze_hitting(spec));
    auto c = make_limit_chain(spec, p);
    CHECK(c.honest);
    CHECK(c.exit_probs[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(exit_sum(c) == doctest::Approx(1.0).epsilon(1e-10));
    // Origin is left with p_1 / p_0 ~ 1.582 per unit rate; one target normalises it away.
    CHECK(p.values[1] / p.p0() == doctest::Approx(1.58198).epsilon(1e-4));
    double p2 = 0.75 + 0.25 * p.p0();
    CHECK(p.values[2] == doctest::Approx(p2).epsilon(1e-8));
    CHECK(c.rates(1, 2) == doctest::Approx(p2 / p.values[1] * 2.0).epsilon(1e-8));
    CHECK(!c.hazard);
    CHECK(c.origin.phi == 0.0);
}

TEST_CASE("constant h leaves the interior rates alone") {
    auto spec = fixtures::four_state();
    LimitVector p;
    p.values.assign(spec.n_states(), 0.7);
    p.q0 = spec.q0();
    p.theta = 1.0;
    auto c = make_limit_chain(spec, p);
    for (std::size_t i = 1; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) CHECK(c.rates(i, j) == doctest::Approx(spec.rate(i, j)).epsilon(1e-14));
}

TEST_CASE("limit chain rejects non-positive vectors") {
    auto spec = fixtures::single_interior();
    LimitVector p;
    p.values = {1.0, 0.0};
    CHECK_THROWS_AS(make_limit_chain(spec, p), PreconditionError);
    p.values = {1.0};
    CHECK_THROWS_AS(make_limit_chain(spec, p), PreconditionError);
}

TEST_CASE("recurrent limit chain uses the phi tilt") {
    auto spec = fixtures::single_interior();
    auto sol = solve_phi(spec);
    auto c = make_limit_chain(spec, limit_vector_recurrent(spec, sol));
    CHECK(c.origin.phi == doctest::Approx(sol.phi));
    CHECK(c.holding_rate[1] == doctest::Approx(2.0 - sol.phi));
    CHECK(row_conservation_residual(c) <= 1e-10);
    // density proportional to e^{(phi - q0) t}
    double a = sol.phi - 1.0;
    CHECK(c.origin.density(0.6) / c.origin.density(0.2) == doctest::Approx(std::exp(0.4 * a)).epsilon(1e-12));
    CHECK(c.origin.inverse_cdf(c.origin.cdf(0.37)) == doctest::Approx(0.37).epsilon(1e-10));
}

TEST_CASE("property: honest transforms conserve every interior row") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + rng() % 6;
        auto spec = fixtures::random_chain(rng, n, 0.5 + 0.1 * static_cast<double>(rng() % 10));
        if (is_transient(spec)) continue;
        auto sol = solve_phi(spec);
        auto lim = make_limit_chain(spec, limit_vector_recurrent(spec, sol));
        CHECK(row_conservation_residual(lim) <= 1e-10);
        CHECK(exit_sum(lim) == doctest::Approx(1.0).epsilon(1e-10));
        auto hl = make_hlambda(spec, 0.5 * sol.phi);
        CHECK(row_conservation_residual(hl) <= 1e-10);
        auto hphi = make_hlambda(spec, sol.phi);
        CHECK(row_conservation_residual(hphi) <= 1e-10);
        CHECK(hphi.honest);
        // zero pattern preserved
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) CHECK((lim.rates(i, j) > 0.0) == (spec.rate(i, j) > 0.0));
    }
}

TEST_CASE("vague limit hazard") {
    auto spec = fixtures::four_state();
    auto c = make_vague_limit(spec);
    REQUIRE(c.hazard);
    CHECK(!c.honest);
    const double q0 = 1.5;
    CHECK((*c.hazard)(0.0) == doctest::Approx(q0 * std::exp(-q0) / (1.0 - std::exp(-q0))).epsilon(1e-12));
    double prev = 0.0;
    for (double u = 0.0; u < 1.0; u += 0.05) {
        double v = (*c.hazard)(u);
        CHECK(v > prev);
        prev = v;
    }
    CHECK((*c.hazard)(1.0 - 1e-9) > 1e6);
    for (std::size_t i = 1; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) CHECK(c.rates(i, j) == spec.rate(i, j));
    CHECK(c.h_origin(0.3) ==
          doctest::Approx((1.0 - std::exp(-q0 * 0.7)) / (1.0 - std::exp(-q0))).epsilon(1e-12));
    CHECK(conditioned_json(c).find("\"theorem36\"") != std::string::npos);
}

TEST_CASE("h-lambda transform") {
    auto spec = fixtures::single_interior();
    SUBCASE("lambda = 0 is the raw chain with death at full holding") {
        auto c = make_hlambda(spec, 0.0);
        CHECK(c.h_values[1] == doctest::Approx(1.0));
        CHECK(c.rates(1, 0) == doctest::Approx(2.0));
        CHECK(c.origin.full_hold_death == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
        CHECK(!c.honest);
    }
    SUBCASE("scalar closed form h_1 = 2 / (2 - lambda)") {
        for (double lambda : {0.1, 0.25, 0.4}) {
            auto c = make_hlambda(spec, lambda);
            CHECK(c.h_values[1] == doctest::Approx(2.0 / (2.0 - lambda)).epsilon(1e-10));
            CHECK(c.holding_rate[1] == doctest::Approx(2.0 - lambda));
            CHECK(c.rates(1, 0) == doctest::Approx(2.0 - lambda).epsilon(1e-10));
        }
    }
    SUBCASE("lambda = phi is honest") {
        auto sol = solve_phi(spec);
        auto c = make_hlambda(spec, sol.phi);
        CHECK(c.honest);
        CHECK(c.origin.full_hold_death <= 1e-10);
    }
    SUBCASE("I(lambda) > 1 is refused") {
        // I(1) = J_0(1) * F_1(1) = 2 here.
        CHECK_THROWS_AS(make_hlambda(spec, 1.0), PreconditionError);
        CHECK_THROWS_AS(make_hlambda(spec, -0.1), PreconditionError);
    }
}

TEST_CASE("subexponential weak limit") {
    auto spec = fixtures::recurrent_walk(30);
    Vector a(31, 0.0);
    for (std::size_t i = 1; i <= 30; ++i) a[i] = std::ldexp(1.0, static_cast<int>(i)) - 1.0;
    auto c = make_subexp_weak(spec, a, 1);
    const double e1 = std::exp(1.0) - 1.0;
    for (std::size_t i = 1; i <= 30; ++i) CHECK(c.h_values[i] == doctest::Approx(1.0 + a[i] / e1).epsilon(1e-12));
    // 2^i - 1 is harmonic away from the truncation edge only.
    auto h = harmonic_vector_bd(spec);
    auto honest = make_subexp_weak(spec, h, 1);
    CHECK(honest.honest);
    CHECK(honest.harmonic_residual <= 1e-9 * *std::max_element(h.begin(), h.end()));

    Vector zero(31, 0.0);
    CHECK_THROWS_AS(make_subexp_weak(spec, zero, 1), PreconditionError);
    auto wide = ChainSpec::create(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}});
    CHECK_THROWS_AS(make_subexp_weak(wide, Vector{0.0, 1.0, 1.0}, 1), PreconditionError);
    CHECK_THROWS_AS(make_subexp_weak(spec, Vector{1.0}, 1), PreconditionError);
}

TEST_CASE("conditioned JSON export") {
    auto spec = fixtures::single_interior();
    auto json = conditioned_json(make_limit_chain(spec, limit_vector_recurrent(spec, solve_phi(spec))));
    for (const char* key : {"interior_rates", "origin_holding", "tilted_exponential", "exit_probs", "h_values",
                            "honest"})
        CHECK(json.find(key) != std::string::npos);
    CHECK(json.find("hazard") == std::string::npos);
}
