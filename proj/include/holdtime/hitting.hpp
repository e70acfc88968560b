#pragma once

#include <optional>

#include "holdtime/chain.hpp"
#include "holdtime/spectral.hpp"

namespace holdtime {

// Delta at or below this is read as "no escape": the truncated stand-in of a
// recurrent chain still leaks a little mass through its boundary.
inline constexpr double kTransienceTolerance = 1e-6;

struct HittingAnalysis {
    Vector beta;          // per chain state; beta[0] = 0
    double mu_C = 0.0;
    double alpha_C = 0.0;
    double delta = 0.0;
    bool transient = false;
    std::optional<std::size_t> truncation_level;  // top state when the spec is a truncation
};

// F_{i,0}(lambda) and its derivative, per chain state. Entry 0 is the trivial
// F_{0,0} = 1; boundary states of a transient truncation never hit 0 and get 0.
struct MgfValue {
    double lambda = 0.0;
    Vector values;
    Vector derivs;
    bool finite = false;
};

// Probability of never reaching 0, with boundary states counted as escape.
// All zero for chains without a truncation boundary and for truncations whose
// Delta does not exceed kTransienceTolerance.
Vector never_hit_prob(const ChainSpec& spec);
bool is_transient(const ChainSpec& spec);

// The view the hitting analyses use: escape for transient truncations,
// the finite chain as written otherwise.
KilledGenerator::View hitting_view(const ChainSpec& spec);

MgfValue hitting_mgf(const ChainSpec& spec, double lambda);
MgfValue hitting_mgf(const ChainSpec& spec, double lambda, KilledGenerator::View view);

// gamma_lambda for the nearest-neighbour walk, so that F_{i,0} = gamma^i.
double bd_gamma(double b, double d, double lambda);

struct DecayParams {
    double mu_C = 0.0;
    double alpha_C = 0.0;
    bool transient = false;
};
DecayParams decay_params(const ChainSpec& spec);

HittingAnalysis analyze_hitting(const ChainSpec& spec);

// Harmonic function of the killed birth-death chain with h_0 = 0, h_1 = 1.
// Throws StructureError when the interior is not nearest-neighbour.
Vector harmonic_vector_bd(const ChainSpec& spec);

// Max over interior non-boundary states of |(Q h)_i| with h_0 = 0, scaled by
// |h_i| when `relative` is set.
double harmonic_residual(const ChainSpec& spec, const Vector& h, bool relative);

}  // namespace holdtime
