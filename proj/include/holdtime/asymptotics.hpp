#pragma once

#include <string>

#include "holdtime/chain.hpp"
#include "holdtime/hitting.hpp"

namespace holdtime {

// J_a(x) = int_0^x e^{a v} dv and its derivative in a, int_0^x v e^{a v} dv.
// Both switch to their Taylor forms for |a| < 1e-8.
double tilted_integral(double a, double x);
double tilted_integral_da(double a, double x);

struct ReturnMgfValue {
    double lambda = 0.0;
    double value = 0.0;   // I(lambda)
    double deriv = 0.0;   // I'(lambda)
    bool finite = false;
};

// Transform of the defective return-cycle density g: I(lambda) is the
// exponential moment of the return time W on the event that the first holding
// time at 0 stays below the threshold.
class ReturnCycle {
public:
    explicit ReturnCycle(const ChainSpec& spec);

    ReturnMgfValue at(double lambda) const;
    KilledGenerator::View view() const noexcept { return view_; }

private:
    const ChainSpec* spec_;
    KilledGenerator::View view_;
};

ReturnMgfValue return_mgf(const ChainSpec& spec, double lambda);

enum class Regime { AlphaPositive, NoRoot, DerivativeInfinite };
const char* to_string(Regime r) noexcept;

struct PhiSolution {
    double phi = 0.0;
    double kappa = 0.0;
    double iprime_at_phi = 0.0;
    double i_at_phi = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double alpha_C = 0.0;
    // Extrapolated I(alpha^C-) when the probe sequence was needed.
    double i_limit = 0.0;
    Regime regime = Regime::AlphaPositive;
};

inline constexpr double kPhiTolerance = 1e-12;

// Root of I(phi) = 1 on (0, alpha^C) by bisection, and the limit constant
// kappa = e^{(phi - q_0) theta} / (phi I'(phi)). Needs a recurrent spec.
PhiSolution solve_phi(const ChainSpec& spec);

// Limit function p on the augmented state space.
struct LimitVector {
    Vector values;       // per chain state; values[0] = p_(0,0)
    double phi = 0.0;    // space-time rate attached to p (0 in the transient case)
    double q0 = 0.0;
    double theta = 1.0;
    std::string convention;

    double p0() const { return values[0]; }
    // p_(0,u): p0 * J_{phi-q0}(theta - u) / J_{phi-q0}(theta); zero at u = theta.
    double origin(double u) const;
};

LimitVector limit_vector_recurrent(const ChainSpec& spec, const PhiSolution& sol);
LimitVector limit_vector_transient(const ChainSpec& spec, const HittingAnalysis& ha);

}  // namespace holdtime
