#include "holdtime/conditioned.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "holdtime/hitting.hpp"

namespace holdtime {

double OriginHarmonic::operator()(double u) const {
    if (u >= theta) return 0.0;
    const double jt = tilted_integral(tilt, theta);
    return scale * (jt - mass * tilted_integral(tilt, u)) * std::exp(-tilt * u) / jt;
}

double OriginLaw::density(double t) const {
    if (t < 0.0 || t >= theta) return 0.0;
    const double a = phi - q0;
    return std::exp(a * t) / tilted_integral(a, theta);
}

double OriginLaw::cdf(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= theta) return 1.0;
    const double a = phi - q0;
    return tilted_integral(a, t) / tilted_integral(a, theta);
}

double OriginLaw::inverse_cdf(double y) const {
    const double a = phi - q0;
    const double target = y * tilted_integral(a, theta);
    double t = std::abs(a) < 1e-8 ? target : std::log1p(a * target) / a;
    return std::clamp(t, 0.0, std::nextafter(theta, 0.0));
}

double KillingHazard::operator()(double u) const {
    return q0 * std::exp(-q0 * theta) / -std::expm1(-q0 * (theta - u));
}

double ConditionedChain::h(const AugmentedState& s) const {
    if (const auto* in = std::get_if<Interior>(&s)) return h_values[in->state];
    return h_origin(std::get<AtOrigin>(s).clock);
}

const char* to_string(ConditionedChain::Kind k) noexcept {
    switch (k) {
        case ConditionedChain::Kind::Limit: return "limit";
        case ConditionedChain::Kind::Vague: return "vague";
        case ConditionedChain::Kind::HLambda: return "hlambda";
        case ConditionedChain::Kind::SubexpWeak: return "subexp";
    }
    return "unknown";
}

namespace {

// Rates h_j / h_i q_ij on the interior (h_values[0] standing in for (0,0)),
// holding rate q_i - tilt, and exit probabilities proportional to q_{0j} h_j.
ConditionedChain transform(const ChainSpec& spec, const Vector& h, double tilt) {
    const std::size_t n = spec.n_states();
    ConditionedChain c;
    c.n_states = n;
    c.rates = Matrix(n, n);
    c.holding_rate.assign(n, 0.0);
    c.h_values = h;
    c.time_factor = tilt;
    c.boundary = spec.truncation_boundary();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(h[i] > 0.0)) continue;  // unreachable under the transform
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || spec.rate(i, j) == 0.0) continue;
            c.rates(i, j) = h[j] / h[i] * spec.rate(i, j);
            row += c.rates(i, j);
        }
        c.holding_rate[i] = spec.exit_rate(i) - tilt;
        if (spec.is_boundary(i)) c.holding_rate[i] = row;
    }
    c.exit_probs.assign(n, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        c.exit_probs[j] = spec.rate(0, j) * h[j];
        total += c.exit_probs[j];
    }
    for (auto& e : c.exit_probs) e /= total;
    c.origin.q0 = spec.q0();
    c.origin.theta = spec.wait_threshold();
    c.h_origin.theta = spec.wait_threshold();
    return c;
}

}  // namespace

ConditionedChain make_limit_chain(const ChainSpec& spec, const LimitVector& p) {
    if (p.values.size() != spec.n_states()) throw PreconditionError("limit vector does not match the spec");
    for (double v : p.values)
        if (!(v > 0.0)) throw PreconditionError("limit vector must be strictly positive");
    auto c = transform(spec, p.values, p.phi);
    c.kind = ConditionedChain::Kind::Limit;
    c.origin.phi = p.phi;
    c.h_origin.scale = p.p0();
    c.h_origin.tilt = p.phi - spec.q0();
    c.h_origin.mass = 1.0;
    c.honest = true;
    return c;
}

ConditionedChain make_vague_limit(const ChainSpec& spec) {
    Vector h(spec.n_states(), 1.0);
    auto c = transform(spec, h, 0.0);
    c.kind = ConditionedChain::Kind::Vague;
    c.origin.phi = 0.0;
    c.h_origin.scale = 1.0;
    c.h_origin.tilt = -spec.q0();
    c.hazard = KillingHazard{spec.q0(), spec.wait_threshold()};
    c.honest = false;
    return c;
}

ConditionedChain make_hlambda(const ChainSpec& spec, double lambda) {
    if (!(lambda >= 0.0)) throw PreconditionError("make_hlambda needs lambda >= 0");
    auto cycle = return_mgf(spec, lambda);
    if (!cycle.finite) throw PreconditionError("I(lambda) is infinite; lambda must stay below alpha^C");
    if (cycle.value > 1.0 + 1e-9)
        throw PreconditionError("I(lambda) = " + std::to_string(cycle.value) +
                                " > 1: h^lambda is not superharmonic at the origin");
    auto f = hitting_mgf(spec, lambda);
    auto c = transform(spec, f.values, lambda);
    c.kind = ConditionedChain::Kind::HLambda;
    c.origin.phi = lambda;
    c.origin.full_hold_death = std::max(0.0, 1.0 - cycle.value);
    c.h_origin.scale = 1.0;
    c.h_origin.tilt = lambda - spec.q0();
    c.h_origin.mass = cycle.value;
    c.honest = c.origin.full_hold_death <= 1e-10;
    return c;
}

ConditionedChain make_subexp_weak(const ChainSpec& spec, const Vector& a, std::size_t exit_bound) {
    const std::size_t n = spec.n_states();
    if (a.size() != n) throw PreconditionError("tail-coefficient vector must have one entry per state");
    if (a[0] != 0.0) throw PreconditionError("tail coefficient a_0 must be 0");
    for (double x : a)
        if (!(x >= 0.0) || !std::isfinite(x)) throw PreconditionError("tail coefficients must be finite and >= 0");
    for (std::size_t j = exit_bound + 1; j < n; ++j)
        if (spec.rate(0, j) > 0.0)
            throw PreconditionError("origin exit to state " + std::to_string(j) + " exceeds the declared bound " +
                                    std::to_string(exit_bound));
    double m = 0.0;
    for (std::size_t j = 1; j < n; ++j) m += spec.rate(0, j) * a[j];
    m /= spec.q0();
    if (!(m > 0.0)) throw PreconditionError("m = sum q_0i a_i / q_0 vanishes; a must be positive on an exit target");

    const double k = std::expm1(spec.q0() * spec.wait_threshold()) * m;
    Vector h(n);
    h[0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) h[i] = 1.0 + a[i] / k;

    auto c = transform(spec, h, 0.0);
    c.kind = ConditionedChain::Kind::SubexpWeak;
    c.origin.phi = 0.0;
    c.h_origin.scale = 1.0;
    c.h_origin.tilt = -spec.q0();
    c.harmonic_residual = harmonic_residual(spec, a, false);
    double amax = *std::max_element(a.begin(), a.end());
    c.honest = c.harmonic_residual <= 1e-9 * amax;
    return c;
}

double row_conservation_residual(const ConditionedChain& c) {
    double worst = 0.0;
    for (std::size_t i = 1; i < c.n_states; ++i) {
        if (std::binary_search(c.boundary.begin(), c.boundary.end(), i)) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < c.n_states; ++j)
            if (j != i) row += c.rates(i, j);
        worst = std::max(worst, std::abs(row - c.holding_rate[i]) / c.holding_rate[i]);
    }
    return worst;
}

std::string conditioned_json(const ConditionedChain& c) {
    using json = nlohmann::json;
    json doc;
    doc["kind"] = to_string(c.kind);
    json rates = json::array();
    json holding = json::array();
    for (std::size_t i = 1; i < c.n_states; ++i) {
        for (std::size_t j = 0; j < c.n_states; ++j)
            if (j != i && c.rates(i, j) > 0.0) rates.push_back({i, j, c.rates(i, j)});
        holding.push_back({i, c.holding_rate[i]});
    }
    doc["interior_rates"] = std::move(rates);
    doc["holding_rates"] = std::move(holding);
    doc["origin_holding"] = {{"type", "tilted_exponential"},
                             {"phi", c.origin.phi},
                             {"q0", c.origin.q0},
                             {"theta", c.origin.theta},
                             {"full_hold_death", c.origin.full_hold_death}};
    json exits = json::array();
    for (std::size_t j = 0; j < c.n_states; ++j)
        if (c.exit_probs[j] > 0.0) exits.push_back({j, c.exit_probs[j]});
    doc["exit_probs"] = std::move(exits);
    if (c.hazard) doc["hazard"] = {{"type", "theorem36"}, {"q0", c.hazard->q0}, {"theta", c.hazard->theta}};
    doc["h_values"] = c.h_values;
    doc["h_origin"] = {{"scale", c.h_origin.scale}, {"tilt", c.h_origin.tilt}, {"mass", c.h_origin.mass}};
    doc["time_factor"] = c.time_factor;
    doc["honest"] = c.honest;
    if (c.kind == ConditionedChain::Kind::SubexpWeak) doc["harmonic_residual"] = c.harmonic_residual;
    return doc.dump(2);
}

}  // namespace holdtime
