// One PASS/FAIL line per acceptance criterion. Reference values come from
// closed forms or scalar bisection in this file, not from the library.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "holdtime/asymptotics.hpp"
#include "holdtime/coinruns.hpp"
#include "holdtime/conditioned.hpp"
#include "holdtime/hitting.hpp"
#include "holdtime/montecarlo.hpp"
#include "holdtime/renewal.hpp"
#include "holdtime/spectral.hpp"

using namespace holdtime;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double at(const SurvivalCurve& c, double t) { return c.values[static_cast<std::size_t>(std::llround(t / c.dt))]; }

Outcome coin_runs() {
    Outcome o;
    const double s2 = (1.0 + std::sqrt(5.0)) / 4.0;  // root of x^2 - x/2 - 1/4
    const double c2 = (s2 - 0.5) / (0.5 * (3.0 * s2 - 2.0));
    double root = coin_root(0.5, 2);
    double c = coin_constant(0.5, 2, root);
    o.require(std::abs(root - s2) <= 1e-9, fmt("s_2 = %.12f", root));
    o.require(std::abs(c - c2) <= 1e-8, fmt("c_2 = %.12f", c));
    o.require(std::abs(c - 1.44721360) <= 1e-8, fmt("c_2 = %.12f vs 1.44721360", c));
    // 8 of the 16 strings of length 4 avoid HH
    int good = 0;
    for (int m = 0; m < 16; ++m) good += (m & (m >> 1)) == 0;
    o.require(coin_exact(0.5, 2, 4) == good / 16.0, "exact(4) != 0.5");
    double exact = coin_exact(0.5, 2, 20);
    double rel = std::abs(c * std::pow(root, 21) - exact) / exact;
    o.require(rel < 0.01, fmt("n=20 relative error %.3g", rel));
    o.detail = o.detail.empty() ? fmt("s_2=%.10f c_2=%.10f rel(20)=%.2e", root, c, rel) : o.detail;
    return o;
}

Outcome poisson_case() {
    Outcome o;
    auto one = poisson_phi(1.0);
    o.require(one.phi == 1.0 && one.c == 2.0, "r=1 is not (1, 2)");
    const double target = 2.0 * std::exp(-2.0);
    double oracle = fixtures::bisect([&](double x) { return x * std::exp(-x) - target; }, 0.0, 1.0);
    auto two = poisson_phi(2.0);
    o.require(std::abs(two.phi - oracle) <= 1e-10, fmt("r=2 phi %.14f vs %.14f", two.phi, oracle));
    auto sol = solve_phi(fixtures::poisson_chain(2.0));
    o.require(std::abs(sol.phi - two.phi) <= 1e-8, fmt("solve_phi %.12f", sol.phi));
    if (o.ok) o.detail = fmt("phi_2=%.12f c_2=%.10f solver diff %.1e", two.phi, two.c, std::abs(sol.phi - two.phi));
    return o;
}

Outcome plateau() {
    Outcome o;
    auto spec = fixtures::single_interior();
    auto sol = solve_phi(spec);
    auto curve = solve_renewal(spec, 40.0, 0.005);
    double lo = 1e300, hi = 0.0, sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        double t = curve.t(k);
        if (t < 20.0 - 1e-9) continue;
        double v = std::exp(sol.phi * t) * curve.values[k];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++n;
    }
    double mean = sum / static_cast<double>(n);
    double variation = (hi - lo) / mean;
    o.require(variation < 0.005, fmt("variation %.3g", variation));
    o.require(std::abs(mean - sol.kappa) <= 1e-3, fmt("plateau %.6f vs kappa %.6f", mean, sol.kappa));
    if (o.ok) o.detail = fmt("plateau %.6f kappa %.6f variation %.2e", mean, sol.kappa, variation);
    return o;
}

Outcome transient_limit() {
    Outcome o;
    const double e = std::exp(-1.0), delta = 0.5;  // beta_1 = 1 - d/b
    const double p0 = (1.0 - e) * delta / (e + (1.0 - e) * delta);
    auto est = estimate_survival(fixtures::transient_walk(60), AtOrigin{0.0}, {60.0}, 100000, 2024)[0];
    double z = (est.value - p0) / est.se;
    o.require(std::abs(z) <= 3.0, fmt("s(60)=%.5f p0=%.5f z=%.2f", est.value, p0, z));
    o.require(std::abs(p0 - 0.46212) < 1e-5, "closed form drifted");
    if (o.ok) o.detail = fmt("s(60)=%.5f +- %.5f vs p0=%.5f", est.value, est.se, p0);
    return o;
}

Outcome harmonicity() {
    Outcome o;
    auto spec = fixtures::single_interior();
    auto sol = solve_phi(spec);
    auto est = verify_harmonic(spec, space_function(limit_vector_recurrent(spec, sol)), sol.phi,
                               {1.0, 2.0, 5.0, 10.0}, 100000, 55);
    auto [mn, mx] = std::minmax_element(est.begin(), est.end(),
                                        [](const Estimate& a, const Estimate& b) { return a.value < b.value; });
    double range = mx->value - mn->value;
    double allowed = 3.0 * std::hypot(mx->se, mn->se);
    o.require(range <= allowed, fmt("range %.4g > %.4g", range, allowed));
    if (o.ok) o.detail = fmt("profile range %.4f within %.4f (h(0,0)=%.4f)", range, allowed, est[0].value);
    return o;
}

Outcome weak_limit() {
    Outcome o;
    auto spec = fixtures::single_interior();
    auto cond = make_limit_chain(spec, limit_vector_recurrent(spec, solve_phi(spec)));
    auto rep = conditioned_vs_rejection(spec, cond, 15.0, 3.0, 100000, 6);
    o.require(rep.max_z <= 3.0, fmt("max z %.2f", rep.max_z));
    o.require(rep.p_value > 0.01, fmt("chi-square p %.3g", rep.p_value));
    if (o.ok)
        o.detail = fmt("accepted %.0f paths, max z %.2f, chi-square p %.3f", static_cast<double>(rep.accepted),
                       rep.max_z, rep.p_value);
    return o;
}

Outcome renewal_vs_mc() {
    Outcome o;
    const double dt = 0.005;
    struct Case {
        const char* name;
        ChainSpec spec;
    };
    std::vector<Case> cases{{"single", fixtures::single_interior()},
                            {"four-state", fixtures::four_state()},
                            {"poisson", fixtures::poisson_chain(1.0)}};
    Vector grid;
    for (int t = 1; t <= 15; ++t) grid.push_back(t);
    double worst = 0.0;
    std::uint64_t seed = 70;
    for (const auto& c : cases) {
        auto curve = solve_renewal(c.spec, 15.0, dt);
        auto est = estimate_survival(c.spec, AtOrigin{0.0}, grid, 100000, ++seed);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double diff = std::abs(at(curve, grid[k]) - est[k].value);
            double allowed = 3.0 * est[k].se + 5.0 * dt * dt;
            worst = std::max(worst, diff / allowed);
            o.require(diff <= allowed, std::string(c.name) + fmt(" t=%.0f diff %.3g > %.3g", grid[k], diff, allowed));
        }
    }
    if (o.ok) o.detail = fmt("worst |diff|/allowance %.2f over 3 specs x 15 points", worst);
    return o;
}

Outcome decay_closed_form() {
    Outcome o;
    const double limit = 3.0 - 2.0 * std::sqrt(2.0);  // b + d - 2 sqrt(bd)
    double prev = 1e300, mu200 = 0.0;
    std::string seq;
    for (std::size_t n : {25, 50, 100, 200}) {
        double mu = perron_decay(KilledGenerator::from_chain(fixtures::recurrent_walk(n)));
        double err = std::abs(mu - limit);
        o.require(err < prev, fmt("no improvement at N=%.0f", static_cast<double>(n)));
        prev = err;
        mu200 = mu;
        seq += fmt("%.5f ", mu);
    }
    o.require(std::abs(mu200 - limit) < 1e-3, fmt("N=200 gives %.6f", mu200));
    if (o.ok) o.detail = "mu_C(N=25,50,100,200) = " + seq + fmt("-> %.6f", limit);
    return o;
}

Outcome property_suite() {
    Outcome o;
    // (a) subexponential diagnostic
    Vector expo(100000);
    for (std::size_t k = 0; k < expo.size(); ++k) expo[k] = PathStream(404, k).exponential(1.0);
    Vector grid = log_grid(0.1, 1e6, 80);
    auto light = subexp_diagnostic(expo, 2, grid, 1);
    o.require(light.last_decade_max > 2.0 && !light.consistent,
              fmt("exponential not rejected (max %.3f)", light.last_decade_max));
    auto bd = fixtures::equal_decreasing(400);
    auto heavy = subexp_diagnostic(sample_hitting_times(bd, 1, 100000, 1e6, 405), 2, grid, 406, kSubexpTolerance, 1e6);
    double top = 0.0;
    for (const auto& p : heavy.curve) top = std::max(top, p.ratio);
    o.require(!heavy.curve.empty() && top <= 2.5, fmt("1/i walk ratio reaches %.3f", top));

    // (b) origin-clock tail ratio on a heavy-tailed walk
    auto walk = fixtures::equal_decreasing(200);
    const double u = 0.5;
    const double target = -std::expm1(-(1.0 - u)) / -std::expm1(-1.0);
    Vector ratios;
    for (double t : {80.0, 160.0, 320.0, 640.0, 1280.0})
        ratios.push_back(estimate_tail_ratio(walk, AtOrigin{u}, AtOrigin{0.0}, 0.0, t, 40000, 407).ratio.value);
    for (std::size_t k = ratios.size() - 3; k < ratios.size(); ++k)
        o.require(std::abs(ratios[k] - target) <= 0.1 * target, fmt("tail ratio %.3f vs %.3f", ratios[k], target));

    // (c) harmonic tail coefficients give an honest weak limit
    auto a = harmonic_vector_bd(walk);
    auto weak = make_subexp_weak(walk, a, 1);
    o.require(weak.honest && weak.harmonic_residual <= 1e-9, fmt("residual %.3g", weak.harmonic_residual));

    // (d) h-lambda at zero against the raw chain
    auto spec = fixtures::four_state();
    Vector sgrid{0.5, 1.0, 2.0, 4.0};
    auto raw = estimate_survival(spec, AtOrigin{0.0}, sgrid, 100000, 408);
    auto tr = estimate_survival(make_hlambda(spec, 0.0), AtOrigin{0.0}, sgrid, 100000, 409);
    for (std::size_t k = 0; k < sgrid.size(); ++k)
        o.require(std::abs(raw[k].value - tr[k].value) <= 3.0 * std::hypot(raw[k].se, tr[k].se),
                  fmt("h-lambda(0) differs at t=%.1f", sgrid[k]));
    if (o.ok)
        o.detail = fmt("exp max %.2f, 1/i max %.3f, tail ratio %.3f", light.last_decade_max, top, ratios.back()) +
                   fmt(" vs %.3f, residual %.1e", target, weak.harmonic_residual);
    return o;
}

Outcome invariants() {
    Outcome o;
    std::mt19937_64 rng(2718);
    int checked = 0;
    for (int trial = 0; trial < 25; ++trial) {
        auto spec = fixtures::random_chain(rng, 2 + rng() % 6, 0.5 + 0.25 * static_cast<double>(rng() % 5));
        auto sol = solve_phi(spec);
        // F increasing in lambda, I convex on [0, phi]
        auto f0 = hitting_mgf(spec, 0.0), f1 = hitting_mgf(spec, 0.5 * sol.phi), f2 = hitting_mgf(spec, sol.phi);
        for (std::size_t i = 1; i < spec.n_states(); ++i)
            o.require(f0.values[i] <= f1.values[i] && f1.values[i] <= f2.values[i], "F not monotone");
        double i0 = return_mgf(spec, 0.0).value, ih = return_mgf(spec, 0.5 * sol.phi).value,
               i1 = return_mgf(spec, sol.phi).value;
        o.require(ih <= 0.5 * (i0 + i1) + 1e-12, "I not convex");
        o.require(std::abs(i1 - 1.0) <= 1e-9, "I(phi) != 1");
        // phi scales with time
        double c = 0.5 + static_cast<double>(rng() % 6) * 0.5;
        o.require(std::abs(solve_phi(spec.rescaled(c)).phi - c * sol.phi) <= 1e-9 * c * sol.phi, "phi not covariant");
        // semigroup of the killed evolution
        auto gen = KilledGenerator::from_chain(spec);
        Vector v(gen.size());
        for (auto& x : v) x = static_cast<double>(rng() % 100) / 100.0;
        auto two = expm_action(gen, expm_action(gen, v, 0.3), 0.7);
        auto once = expm_action(gen, v, 1.0);
        for (std::size_t k = 0; k < v.size(); ++k)
            o.require(std::abs(two[k] - once[k]) <= 1e-9, "expm_action not a semigroup");
        ++checked;
    }
    // fixed-point identities of the transient limit
    for (std::size_t n : {20, 40, 60}) {
        auto spec = fixtures::transient_walk(n);
        auto ha = analyze_hitting(spec);
        auto p = limit_vector_transient(spec, ha);
        const double e = std::exp(-spec.q0() * spec.wait_threshold());
        o.require(std::abs(p.p0() - (1 - e) * ha.delta / (e + (1 - e) * ha.delta)) <= 1e-12, "p0 identity");
        for (std::size_t i = 1; i < n; ++i)
            o.require(std::abs(p.values[i] - (ha.beta[i] + (1 - ha.beta[i]) * p.p0())) <= 1e-12, "p_i identity");
        o.require(std::abs(ha.beta[1] - 0.5) <= 1e-5, "beta_1 far from 1 - d/b");
    }
    // seed reproducibility across worker counts
    auto spec = fixtures::four_state();
    auto a = estimate_survival(spec, AtOrigin{0.0}, {1.0, 3.0}, 20000, 99, McOptions{1});
    auto b = estimate_survival(spec, AtOrigin{0.0}, {1.0, 3.0}, 20000, 99, McOptions{8});
    o.require(a[0].value == b[0].value && a[1].value == b[1].value, "thread count changed results");
    if (o.ok) o.detail = fmt("%.0f random chains, transient identities, thread invariance", checked);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> criteria{
        {"coin runs", coin_runs},
        {"poisson case", poisson_case},
        {"alpha-positive plateau", plateau},
        {"transient limit", transient_limit},
        {"martingale profile", harmonicity},
        {"weak-limit agreement", weak_limit},
        {"renewal vs monte carlo", renewal_vs_mc},
        {"decay closed form", decay_closed_form},
        {"heavy-tail properties", property_suite},
        {"invariant suites", invariants},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %zu %s: %s (%.2f s)\n", o.ok ? "PASS" : "FAIL", k + 1, criteria[k].name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
        failed += !o.ok;
    }
    return failed == 0 ? 0 : 1;
}
