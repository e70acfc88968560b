#pragma once

#include <optional>
#include <string>

#include "holdtime/chain.hpp"
#include "holdtime/spectral.hpp"

namespace holdtime {

// s(t_k) = P_start(tau > t_k) on t_k = k dt.
struct SurvivalCurve {
    double dt = 0.0;
    Vector values;
    AugmentedState start = AtOrigin{0.0};
    // Weight e^{-q_0 theta} of the 1(t < theta) term in the (0,0) curve. Lifts
    // convolve against the continuous remainder so the jump does not cost order.
    double origin_jump = 0.0;
    double theta = 1.0;

    double t(std::size_t k) const { return static_cast<double>(k) * dt; }
    std::size_t size() const noexcept { return values.size(); }
};

// Defective density of the return time W on {first holding < theta}, by
// composite Simpson over the holding time with the given substep (default
// theta / 400).
double g_density(const ChainSpec& spec, double t, std::optional<double> step = std::nullopt);

// g on the grid t_k = k dt, k = 0..round(t_max/dt); the node at t = theta
// carries the average of the one-sided limits.
Vector g_on_grid(const ChainSpec& spec, double t_max, double dt);

// Trapezoidal forward march of the renewal equation for s_(0,0).
// Needs dt <= theta/50, theta a multiple of dt, and t_max >= theta.
SurvivalCurve solve_renewal(const ChainSpec& spec, double t_max, double dt);

// s_i for an interior start, or s_(0,u) for an origin start with u a multiple
// of dt, from the (0,0) curve.
SurvivalCurve lift_survival(const ChainSpec& spec, const SurvivalCurve& base, const AugmentedState& start);

// CSV "t,s,scaled_s"; scaled_s = e^{phi t} s(t), left empty without phi.
std::string survival_csv(const SurvivalCurve& curve, std::optional<double> phi);

}  // namespace holdtime
