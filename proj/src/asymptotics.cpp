#include "holdtime/asymptotics.hpp"

#include <cmath>
#include <limits>

namespace holdtime {

double tilted_integral(double a, double x) {
    if (std::abs(a) < 1e-8) return x + 0.5 * a * x * x;
    return std::expm1(a * x) / a;
}

double tilted_integral_da(double a, double x) {
    if (std::abs(a) < 1e-8) return x * x / 2.0 + a * x * x * x / 3.0;
    return x * std::exp(a * x) / a - std::expm1(a * x) / (a * a);
}

ReturnCycle::ReturnCycle(const ChainSpec& spec) : spec_(&spec), view_(hitting_view(spec)) {}

ReturnMgfValue ReturnCycle::at(double lambda) const {
    const ChainSpec& s = *spec_;
    ReturnMgfValue out;
    out.lambda = lambda;
    auto f = hitting_mgf(s, lambda, view_);
    if (!f.finite) {
        out.value = out.deriv = std::numeric_limits<double>::infinity();
        return out;
    }
    double sum = s.self_return_rate();
    double dsum = 0.0;
    for (std::size_t j = 1; j < s.n_states(); ++j) {
        sum += s.rate(0, j) * f.values[j];
        dsum += s.rate(0, j) * f.derivs[j];
    }
    const double a = lambda - s.q0();
    const double theta = s.wait_threshold();
    const double j = tilted_integral(a, theta);
    out.value = j * sum;
    out.deriv = tilted_integral_da(a, theta) * sum + j * dsum;
    out.finite = std::isfinite(out.value) && std::isfinite(out.deriv);
    return out;
}

ReturnMgfValue return_mgf(const ChainSpec& spec, double lambda) { return ReturnCycle(spec).at(lambda); }

const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::AlphaPositive: return "alpha-positive";
        case Regime::NoRoot: return "no-root";
        case Regime::DerivativeInfinite: return "derivative-infinite";
    }
    return "unknown";
}

PhiSolution solve_phi(const ChainSpec& spec) {
    if (is_transient(spec))
        throw PreconditionError("solve_phi needs a recurrent spec; this one escapes with positive probability");
    ReturnCycle cycle(spec);
    PhiSolution sol;
    sol.alpha_C = perron_decay(KilledGenerator::from_chain(spec));

    auto at_least_one = [&](double lam) {
        auto v = cycle.at(lam);
        return !v.finite || v.value >= 1.0;
    };

    double hi = 0.0;
    if (std::isfinite(sol.alpha_C)) {
        hi = sol.alpha_C * (1.0 - 1e-9);
        if (!at_least_one(hi)) {
            // Probe towards alpha^C and extrapolate the limit by Aitken's delta-squared.
            double prev2 = 0.0, prev1 = 0.0, cur = 0.0;
            for (int k = 6; k <= 12; ++k) {
                auto v = cycle.at(sol.alpha_C * (1.0 - std::pow(10.0, -k)));
                prev2 = prev1;
                prev1 = cur;
                cur = v.finite ? v.value : std::numeric_limits<double>::infinity();
            }
            double denom = (cur - prev1) - (prev1 - prev2);
            double limit = cur;
            if (std::isfinite(cur) && std::abs(denom) > 1e-300)
                limit = cur - (cur - prev1) * (cur - prev1) / denom;
            sol.i_limit = limit;
            sol.bracket_lo = 0.0;
            sol.bracket_hi = sol.alpha_C;
            if (limit < 1.0) {
                sol.regime = Regime::NoRoot;
                sol.phi = sol.alpha_C;
                sol.i_at_phi = cur;
                return sol;
            }
            // The crossing sits within 1e-9 of alpha^C: I' blows up there.
            sol.regime = Regime::DerivativeInfinite;
            sol.phi = sol.alpha_C;
            sol.i_at_phi = limit;
            sol.iprime_at_phi = std::numeric_limits<double>::infinity();
            return sol;
        }
    } else {
        hi = 1.0;
        while (!at_least_one(hi)) {
            hi *= 2.0;
            if (hi > 1e8) throw NumericError("could not bracket the root of I(phi) = 1");
        }
    }

    double lo = 0.0;
    while (hi - lo > kPhiTolerance * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        if (at_least_one(mid))
            hi = mid;
        else
            lo = mid;
    }
    sol.bracket_lo = lo;
    sol.bracket_hi = hi;
    sol.phi = 0.5 * (lo + hi);
    auto v = cycle.at(sol.phi);
    sol.i_at_phi = v.value;
    sol.iprime_at_phi = v.deriv;
    if (!v.finite || !(v.deriv > 0.0)) {
        sol.regime = Regime::DerivativeInfinite;
        return sol;
    }
    sol.regime = Regime::AlphaPositive;
    const double theta = spec.wait_threshold();
    sol.kappa = std::exp((sol.phi - spec.q0()) * theta) / (sol.phi * v.deriv);
    return sol;
}

double LimitVector::origin(double u) const {
    if (u >= theta) return 0.0;
    const double a = phi - q0;
    return values[0] * tilted_integral(a, theta - u) / tilted_integral(a, theta);
}

LimitVector limit_vector_recurrent(const ChainSpec& spec, const PhiSolution& sol) {
    if (sol.regime != Regime::AlphaPositive)
        throw PreconditionError(std::string("limit_vector_recurrent needs regime alpha-positive, got ") +
                                to_string(sol.regime));
    auto f = hitting_mgf(spec, sol.phi, KilledGenerator::View::Reflecting);
    if (!f.finite) throw NumericError("F(phi) is infinite although phi < alpha^C");
    LimitVector p;
    p.phi = sol.phi;
    p.q0 = spec.q0();
    p.theta = spec.wait_threshold();
    p.values.resize(spec.n_states());
    p.values[0] = sol.kappa;
    for (std::size_t i = 1; i < spec.n_states(); ++i) p.values[i] = f.values[i] * sol.kappa;
    p.convention = "e^{phi t} P(tau > t) -> p; p_(0,0) = kappa";
    return p;
}

LimitVector limit_vector_transient(const ChainSpec& spec, const HittingAnalysis& ha) {
    if (!(ha.delta > 0.0))
        throw PreconditionError("limit_vector_transient needs Delta > 0; use the recurrent path");
    const double theta = spec.wait_threshold();
    const double stay = std::exp(-spec.q0() * theta);
    const double leave = -std::expm1(-spec.q0() * theta);
    LimitVector p;
    p.phi = 0.0;
    p.q0 = spec.q0();
    p.theta = theta;
    p.values.resize(spec.n_states());
    const double p0 = leave * ha.delta / (stay + leave * ha.delta);
    p.values[0] = p0;
    for (std::size_t i = 1; i < spec.n_states(); ++i) p.values[i] = ha.beta[i] + (1.0 - ha.beta[i]) * p0;
    p.convention = "P(tau > t) -> p; p_(0,0) = p_0";
    return p;
}

}  // namespace holdtime
