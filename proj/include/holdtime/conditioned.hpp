#pragma once

#include <optional>
#include <string>

#include "holdtime/asymptotics.hpp"
#include "holdtime/chain.hpp"
#include "holdtime/spectral.hpp"

namespace holdtime {

// h at the origin: h(0,u) = scale * (J_a(theta) - mass * J_a(u)) e^{-a u} / J_a(theta).
// With mass = 1 this is scale * J_a(theta - u) / J_a(theta).
struct OriginHarmonic {
    double scale = 1.0;
    double tilt = 0.0;   // a
    double mass = 1.0;   // I(lambda) for the h^lambda transform, else 1
    double theta = 1.0;

    double operator()(double u) const;
};

// Time spent at the origin before leaving: density proportional to
// e^{(phi - q0) t} on [0, theta), carrying total mass 1 - full_hold_death; the
// rest is death on reaching the threshold.
struct OriginLaw {
    double phi = 0.0;
    double q0 = 1.0;
    double theta = 1.0;
    double full_hold_death = 0.0;

    double density(double t) const;          // normalised on [0, theta)
    double cdf(double t) const;
    double inverse_cdf(double y) const;
};

// Killing hazard q0 e^{-q0 theta} / (1 - e^{-q0 (theta - u)}) of the vague limit.
struct KillingHazard {
    double q0 = 1.0;
    double theta = 1.0;

    double operator()(double u) const;
};

// Executable description of a Doob-transformed chain on the augmented space.
struct ConditionedChain {
    enum class Kind { Limit, Vague, HLambda, SubexpWeak };

    Kind kind = Kind::Limit;
    std::size_t n_states = 0;
    Matrix rates;                 // interior i -> j (column 0 means a jump to (0,0)); row 0 unused
    Vector holding_rate;          // total event rate per interior state; any excess over the row sum kills
    OriginLaw origin;
    Vector exit_probs;            // from the origin; index 0 is an immediate return to (0,0)
    std::optional<KillingHazard> hazard;
    Vector h_values;              // h on chain states, h_values[0] = h(0,0)
    OriginHarmonic h_origin;
    double time_factor = 0.0;     // h carries e^{time_factor * t}
    bool honest = true;
    double harmonic_residual = 0.0;
    std::vector<std::size_t> boundary;

    double h(const AugmentedState& s) const;
};

const char* to_string(ConditionedChain::Kind k) noexcept;

// X^infinity from the limit vector (transient or alpha-positive case).
ConditionedChain make_limit_chain(const ChainSpec& spec, const LimitVector& p);

// Substochastic vague limit with killing hazard at the origin.
ConditionedChain make_vague_limit(const ChainSpec& spec);

// h^lambda transform; needs lambda >= 0 with I(lambda) <= 1.
ConditionedChain make_hlambda(const ChainSpec& spec, double lambda);

// Weak limit for comparable subexponential hitting tails with coefficients a
// (per chain state, a[0] = 0). Origin exits must stay within 1..exit_bound.
ConditionedChain make_subexp_weak(const ChainSpec& spec, const Vector& a, std::size_t exit_bound);

// max_i |sum_j rates(i,j) - holding_rate_i| / holding_rate_i over interior,
// non-boundary rows.
double row_conservation_residual(const ConditionedChain& c);

std::string conditioned_json(const ConditionedChain& c);

}  // namespace holdtime
