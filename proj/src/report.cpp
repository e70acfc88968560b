#include "holdtime/report.hpp"

#include <cmath>

#include "holdtime/asymptotics.hpp"
#include "holdtime/hitting.hpp"

namespace holdtime {

namespace {

using json = nlohmann::json;

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json limit_json(const LimitVector& p) {
    json interior = json::array();
    for (std::size_t i = 1; i < p.values.size(); ++i) interior.push_back({i, p.values[i]});
    return {{"convention", p.convention},
            {"p_origin", p.p0()},
            {"p", std::move(interior)},
            {"phi", p.phi}};
}

}  // namespace

json analyze_report(const ChainSpec& spec) {
    json doc;
    doc["states"] = spec.n_states();
    doc["wait_threshold"] = spec.wait_threshold();
    doc["q0"] = spec.q0();

    auto ha = analyze_hitting(spec);
    json beta = json::array();
    for (double b : ha.beta) beta.push_back(b);
    doc["classification"] = ha.transient ? "transient" : "recurrent";
    doc["hitting"] = {{"delta", ha.delta},
                      {"beta", std::move(beta)},
                      {"truncation_level", ha.truncation_level ? json(*ha.truncation_level) : json(nullptr)},
                      {"tolerance", kTransienceTolerance}};
    doc["decay"] = {{"mu_C", number(ha.mu_C)}, {"alpha_C", number(ha.alpha_C)}, {"tolerance", 1e-12}};

    if (ha.transient) {
        doc["limit"] = limit_json(limit_vector_transient(spec, ha));
        doc["limit"]["tolerance"] = kTransienceTolerance;
        return doc;
    }
    auto sol = solve_phi(spec);
    doc["regime"] = to_string(sol.regime);
    doc["phi"] = {{"phi", number(sol.phi)},
                  {"kappa", sol.regime == Regime::AlphaPositive ? number(sol.kappa) : json(nullptr)},
                  {"i_at_phi", number(sol.i_at_phi)},
                  {"i_prime_at_phi", number(sol.iprime_at_phi)},
                  {"bracket", {sol.bracket_lo, number(sol.bracket_hi)}},
                  {"tolerance", kPhiTolerance}};
    if (sol.regime != Regime::AlphaPositive) doc["phi"]["i_limit"] = number(sol.i_limit);
    if (sol.regime == Regime::AlphaPositive) {
        doc["limit"] = limit_json(limit_vector_recurrent(spec, sol));
        doc["limit"]["tolerance"] = kPhiTolerance;
    }
    return doc;
}

}  // namespace holdtime
