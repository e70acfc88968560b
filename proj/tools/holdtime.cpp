// holdtime: command-line front end. Structured results go to stdout as JSON,
// curves and estimates as CSV; failures print a JSON error object instead.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "holdtime/asymptotics.hpp"
#include "holdtime/chain.hpp"
#include "holdtime/coinruns.hpp"
#include "holdtime/conditioned.hpp"
#include "holdtime/errors.hpp"
#include "holdtime/hitting.hpp"
#include "holdtime/montecarlo.hpp"
#include "holdtime/renewal.hpp"
#include "holdtime/report.hpp"

using json = nlohmann::json;
using namespace holdtime;

namespace {

enum Exit { Ok = 0, InputFailure = 1, NumericFailure = 2, Infeasible = 3 };

int exit_code(const Error& e) {
    switch (e.category()) {
        case Error::Category::Input: return InputFailure;
        case Error::Category::Numeric: return NumericFailure;
        case Error::Category::Infeasible: return Infeasible;
    }
    return NumericFailure;
}

json error_body(const Error& e) {
    json body{{"error", e.kind()}, {"message", e.what()}};
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        body["line"] = pe->line();
        body["field"] = pe->field();
    }
    if (const auto* ve = dynamic_cast<const ValidationError*>(&e)) {
        json tags = json::array();
        for (const auto& v : ve->report().violations) tags.push_back({{"violation", to_string(v.tag)}, {"detail", v.detail}});
        body["violations"] = std::move(tags);
    }
    if (const auto* ie = dynamic_cast<const InfeasibleError*>(&e)) body["acceptance_rate"] = ie->acceptance_rate();
    return body;
}

Vector parse_list(const std::string& text) {
    Vector out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw PreconditionError("not a number: '" + item + "'");
        }
    }
    return out;
}

// Evenly spaced points on (0, horizon], or the explicit list when given.
Vector time_grid(const std::string& explicit_grid, double horizon, int points) {
    if (!explicit_grid.empty()) return parse_list(explicit_grid);
    if (!(horizon > 0.0) || points < 1) throw PreconditionError("need horizon > 0 and at least one grid point");
    Vector g;
    for (int k = 1; k <= points; ++k) g.push_back(horizon * k / points);
    return g;
}

LimitVector limit_for(const ChainSpec& spec) {
    auto ha = analyze_hitting(spec);
    if (ha.transient) return limit_vector_transient(spec, ha);
    return limit_vector_recurrent(spec, solve_phi(spec));
}

struct Shared {
    unsigned threads = 0;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotics of the first long holding time at the origin of a Markov chain"};
    app.require_subcommand(1);
    app.fallthrough();
    Shared shared;
    shared.threads = default_threads();
    app.add_option("--threads", shared.threads, "Monte Carlo workers (results do not depend on it)")
        ->envname("HOLDTIME_THREADS")
        ->capture_default_str();

    std::string out;   // whole stdout payload, printed only on success

    // analyze
    std::string spec_path;
    auto* analyze = app.add_subcommand("analyze", "Classify a spec and report decay rates and limit constants (JSON)");
    analyze->add_option("spec", spec_path, "Chain spec file (JSON)")->required();
    analyze->callback([&] { out = analyze_report(load_spec(spec_path)).dump(2) + "\n"; });

    // coin
    double coin_p = 0.5;
    int coin_k = 2;
    int coin_n = -1;
    auto* coin = app.add_subcommand("coin", "Runs of heads: root s_k, constant c_k, optional exact table (JSON or CSV)");
    coin->add_option("--p", coin_p, "Head probability")->capture_default_str();
    coin->add_option("--k", coin_k, "Run length")->capture_default_str();
    coin->add_option("--n", coin_n, "Emit the CSV table for n = 0..N instead of the JSON summary");
    coin->callback([&] {
        auto r = analyze_coin(coin_p, coin_k, coin_n);
        if (coin_n >= 0) {
            out = coin_table_csv(r);
            return;
        }
        json doc{{"p", r.p}, {"k", r.k}, {"s_k", r.s_k}, {"degenerate", r.degenerate}, {"tolerance", kCoinTolerance}};
        doc["c_k"] = r.c_k ? json(*r.c_k) : json(nullptr);
        out = doc.dump(2) + "\n";
    });

    // poisson
    double poisson_r = 1.0;
    auto* poisson = app.add_subcommand("poisson", "Decay rate and constant when the origin rings at Poisson rate r (JSON)");
    poisson->add_option("--r", poisson_r, "Rate")->capture_default_str();
    poisson->callback([&] {
        auto r = poisson_phi(poisson_r);
        out = json{{"r", r.r}, {"phi", r.phi}, {"c", r.c}, {"tolerance", kCoinTolerance}}.dump(2) + "\n";
    });

    // renewal
    double ren_tmax = 40.0, ren_dt = 0.005;
    std::string ren_start = "0";
    auto* renewal = app.add_subcommand("renewal", "Survival curve P(tau > t) from the renewal equation (CSV)");
    renewal->add_option("spec", spec_path, "Chain spec file (JSON)")->required();
    renewal->add_option("--t-max", ren_tmax, "Last grid time")->capture_default_str();
    renewal->add_option("--dt", ren_dt, "Grid step; theta/dt must be an integer and dt <= theta/50")
        ->capture_default_str();
    renewal->add_option("--start", ren_start, "Start state: i for interior, 0 or 0:u at the origin")
        ->capture_default_str();
    renewal->callback([&] {
        auto spec = load_spec(spec_path);
        auto base = solve_renewal(spec, ren_tmax, ren_dt);
        auto start = parse_state(ren_start);
        auto curve = start == AugmentedState{AtOrigin{0.0}} ? base : lift_survival(spec, base, start);
        std::optional<double> phi;
        if (!is_transient(spec)) {
            auto sol = solve_phi(spec);
            if (sol.regime == Regime::AlphaPositive) phi = sol.phi;
        }
        out = survival_csv(curve, phi);
    });

    // simulate
    std::string sim_mode = "survival", sim_start = "0", sim_grid, sim_cond = "limit";
    std::size_t n_paths = 100000;
    double horizon = 10.0, window = 3.0, lambda = 0.0;
    int points = 10;
    std::uint64_t seed = 1;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates (CSV; mode compare prints JSON)");
    simulate->add_option("spec", spec_path, "Chain spec file (JSON)")->required();
    simulate->add_option("--mode", sim_mode,
                         "survival: P(tau > t); conditioned: occupation of [0,s] under the conditioned chain; "
                         "rejection: the same under X^T by rejection; compare: both plus divergence")
        ->check(CLI::IsMember({"survival", "conditioned", "rejection", "compare"}))
        ->capture_default_str();
    simulate->add_option("--n-paths", n_paths, "Replications")->capture_default_str();
    simulate->add_option("--horizon", horizon, "Last survival time, or the conditioning time T")->capture_default_str();
    simulate->add_option("--points", points, "Survival grid points on (0, horizon]")->capture_default_str();
    simulate->add_option("--grid", sim_grid, "Explicit comma-separated survival grid (overrides --points)");
    simulate->add_option("--window", window, "Observation window s for the occupation modes")->capture_default_str();
    simulate->add_option("--start", sim_start, "Start state for survival: i, 0 or 0:u")->capture_default_str();
    simulate->add_option("--cond", sim_cond, "Conditioned chain for the occupation modes")
        ->check(CLI::IsMember({"limit", "vague", "hlambda"}))
        ->capture_default_str();
    simulate->add_option("--lambda", lambda, "lambda for --cond hlambda")->capture_default_str();
    simulate->add_option("--seed", seed, "Master seed")->capture_default_str();
    simulate->callback([&] {
        auto spec = load_spec(spec_path);
        McOptions opt{shared.threads};
        if (sim_mode == "survival") {
            auto grid = time_grid(sim_grid, horizon, points);
            out = estimates_csv(grid, estimate_survival(spec, parse_state(sim_start), grid, n_paths, seed, opt));
            return;
        }
        auto make_cond = [&] {
            if (sim_cond == "vague") return make_vague_limit(spec);
            if (sim_cond == "hlambda") return make_hlambda(spec, lambda);
            return make_limit_chain(spec, limit_for(spec));
        };
        if (sim_mode == "rejection") {
            out = occupation_csv(occupation_rejection(spec, horizon, window, n_paths, seed, opt));
        } else if (sim_mode == "conditioned") {
            out = occupation_csv(occupation_conditioned(make_cond(), window, n_paths, seed, opt));
        } else {
            auto r = conditioned_vs_rejection(spec, make_cond(), horizon, window, n_paths, seed, opt);
            json doc{{"proposals", r.proposals},
                     {"accepted", r.accepted},
                     {"acceptance", r.acceptance},
                     {"conditioned_paths", r.conditioned_paths},
                     {"occupation_rejection", r.occupation_rejection},
                     {"occupation_conditioned", r.occupation_conditioned},
                     {"occupation_diff", r.occupation_diff},
                     {"occupation_se", r.occupation_se},
                     {"max_abs_diff", r.max_abs_diff},
                     {"max_z", r.max_z},
                     {"chi_square", r.chi_square},
                     {"dof", r.dof},
                     {"p_value", r.p_value},
                     {"seed", seed}};
            out = doc.dump(2) + "\n";
        }
    });

    // condition
    std::string cond_mode = "limit", cond_a;
    double cond_lambda = 0.0;
    std::size_t exit_bound = 0;
    auto* condition = app.add_subcommand("condition", "Build a conditioned chain (JSON)");
    condition->add_option("spec", spec_path, "Chain spec file (JSON)")->required();
    condition->add_option("--mode", cond_mode, "limit, vague, hlambda or subexp")
        ->check(CLI::IsMember({"limit", "vague", "hlambda", "subexp"}))
        ->capture_default_str();
    condition->add_option("--lambda", cond_lambda, "lambda for hlambda (needs I(lambda) <= 1)")->capture_default_str();
    condition->add_option("--a", cond_a,
                          "subexp: comma-separated tail coefficients per state (a_0 = 0); "
                          "default: the birth-death harmonic vector");
    condition->add_option("--exit-bound", exit_bound,
                          "subexp: largest origin exit target (default: the largest one in the spec)");
    condition->callback([&] {
        auto spec = load_spec(spec_path);
        ConditionedChain c;
        if (cond_mode == "limit") {
            c = make_limit_chain(spec, limit_for(spec));
        } else if (cond_mode == "vague") {
            c = make_vague_limit(spec);
        } else if (cond_mode == "hlambda") {
            c = make_hlambda(spec, cond_lambda);
        } else {
            Vector a = cond_a.empty() ? harmonic_vector_bd(spec) : parse_list(cond_a);
            std::size_t bound = exit_bound;
            if (bound == 0)
                for (std::size_t j : spec.origin_targets()) bound = std::max(bound, j);
            c = make_subexp_weak(spec, a, bound);
        }
        out = conditioned_json(c) + "\n";
    });

    // tails
    std::string tail_i = "0:0.5", tail_j = "0";
    double tail_v = 0.0, tail_t = 20.0;
    auto* tails = app.add_subcommand("tails", "Estimate s_i(t - v) / s_j(t) (CSV)");
    tails->add_option("spec", spec_path, "Chain spec file (JSON)")->required();
    tails->add_option("--i", tail_i, "Numerator start: i, 0 or 0:u")->capture_default_str();
    tails->add_option("--j", tail_j, "Denominator start: j, 0 or 0:u")->capture_default_str();
    tails->add_option("--v", tail_v, "Lag v >= 0")->capture_default_str();
    tails->add_option("--t", tail_t, "Time t > v")->capture_default_str();
    tails->add_option("--n-paths", n_paths, "Replications per start")->capture_default_str();
    tails->add_option("--seed", seed, "Master seed")->capture_default_str();
    tails->callback([&] {
        auto spec = load_spec(spec_path);
        auto r = estimate_tail_ratio(spec, parse_state(tail_i), parse_state(tail_j), tail_v, tail_t, n_paths, seed,
                                     McOptions{shared.threads});
        if (r.unreliable) std::cerr << "warning: fewer than 10 surviving paths in the denominator\n";
        out = estimates_csv({tail_t}, {r.ratio});
    });

    // diagnose-subexp
    std::size_t diag_state = 1, n_samples = 100000, order = 2;
    double diag_horizon = 1e6, tolerance = kSubexpTolerance;
    int diag_points = 60;
    auto* diag = app.add_subcommand("diagnose-subexp",
                                    "Ratio curve Fbar^{n*}(t)/Fbar(t) for first entry times to 0 (CSV)");
    diag->add_option("spec", spec_path, "Chain spec file (JSON)")->required();
    diag->add_option("--state", diag_state, "Interior start state")->capture_default_str();
    diag->add_option("--n-samples", n_samples, "Number of hitting-time samples")->capture_default_str();
    diag->add_option("--order", order, "Convolution order n >= 2")->capture_default_str();
    diag->add_option("--horizon", diag_horizon, "Censoring time for each sample")->capture_default_str();
    diag->add_option("--points", diag_points, "Log-spaced t points up to the horizon")->capture_default_str();
    diag->add_option("--tolerance", tolerance, "Consistent when the last decade stays <= n (1 + tolerance)")
        ->capture_default_str();
    diag->add_option("--seed", seed, "Master seed")->capture_default_str();
    diag->callback([&] {
        auto spec = load_spec(spec_path);
        auto samples = sample_hitting_times(spec, diag_state, n_samples, diag_horizon, seed, McOptions{shared.threads});
        double lo = diag_horizon * 1e-7;
        auto d = subexp_diagnostic(samples, order, log_grid(lo, diag_horizon, static_cast<std::size_t>(diag_points)),
                                   seed, tolerance, diag_horizon);
        std::ostringstream os;
        os.precision(12);
        os << "t,ratio,tail_count\n";
        for (const auto& p : d.curve) os << p.t << ',' << p.ratio << ',' << p.tail_count << '\n';
        out = os.str();
        std::cerr << "last_decade_max=" << d.last_decade_max << " bound=" << d.bound
                  << " consistent=" << d.consistent << " unreliable=" << d.unreliable
                  << " degenerate=" << d.degenerate << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << json{{"error", "usage"}, {"message", e.what()}}.dump(2) << '\n';
        return InputFailure;
    } catch (const Error& e) {
        std::cout << error_body(e).dump(2) << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cout << json{{"error", "internal"}, {"message", e.what()}}.dump(2) << '\n';
        return NumericFailure;
    }
    std::cout << out;
    return Ok;
}
