#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "holdtime/chain.hpp"
#include "holdtime/conditioned.hpp"
#include "holdtime/spectral.hpp"

namespace holdtime {

// SplitMix64 as a counter-based stream: the state for path `index` under
// `seed` is a hash of both, so any path can be replayed in isolation.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next() noexcept;
    double uniform() noexcept;           // [0, 1)
    double exponential(double rate) noexcept;
    std::size_t below(std::size_t n) noexcept;

private:
    std::uint64_t state_;
};

// Worker count from HOLDTIME_THREADS, else the hardware concurrency.
unsigned default_threads();

struct McOptions {
    unsigned threads = 0;  // 0 = default_threads()
};

struct PathEvent {
    double time;
    std::size_t state;   // 0 is the origin (clock restarted)
};

struct SamplePath {
    std::vector<PathEvent> events;  // events[0] is the start
    double horizon = 0.0;
    double tau = std::numeric_limits<double>::infinity();  // death/threshold time, inf if none before horizon
    double start_clock = 0.0;

    Vector entries() const;      // S_n: times the path (re)enters the origin
    Vector departures() const;   // T_n: times it leaves the origin to the interior
    Vector holdings() const;     // H^n = T_n - S_n (completed holdings only)
    Vector returns() const;      // R^n = S_{n+1} - T_n
};

SamplePath simulate_path(const ChainSpec& spec, const AugmentedState& start, double horizon, std::uint64_t seed);
SamplePath simulate_path(const ConditionedChain& chain, const AugmentedState& start, double horizon,
                         std::uint64_t seed);

struct Estimate {
    double value = 0.0;
    double se = 0.0;          // sample std / sqrt(count)
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

std::vector<Estimate> estimate_survival(const ChainSpec& spec, const AugmentedState& start, const Vector& t_grid,
                                        std::size_t n_paths, std::uint64_t seed, McOptions opt = {});
// Lifetime of a conditioned chain (honest chains survive every t).
std::vector<Estimate> estimate_survival(const ConditionedChain& chain, const AugmentedState& start,
                                        const Vector& t_grid, std::size_t n_paths, std::uint64_t seed,
                                        McOptions opt = {});

struct TailRatio {
    Estimate ratio;
    Estimate numerator;    // s_i(t - v)
    Estimate denominator;  // s_j(t)
    bool unreliable = false;
};

TailRatio estimate_tail_ratio(const ChainSpec& spec, const AugmentedState& i, const AugmentedState& j, double v,
                              double t, std::size_t n_paths, std::uint64_t seed, McOptions opt = {});

// A function on the augmented space: interior values plus h(0, u).
struct SpaceFunction {
    Vector interior;                      // indexed by chain state; entry 0 unused
    std::function<double(double)> origin;

    double operator()(std::size_t state, double clock) const {
        return state == 0 ? origin(clock) : interior[state];
    }
};

SpaceFunction space_function(const LimitVector& p);
SpaceFunction space_function(const ConditionedChain& c);

// E[e^{phi (t ^ tau)} h(X_{t ^ tau})] with X_tau = (0, theta).
std::vector<Estimate> verify_harmonic(const ChainSpec& spec, const SpaceFunction& h, double phi,
                                      const Vector& t_grid, std::size_t n_paths, std::uint64_t seed,
                                      const AugmentedState& start = AtOrigin{0.0}, McOptions opt = {});

struct DivergenceReport {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    double acceptance = 0.0;
    std::size_t conditioned_paths = 0;
    Vector occupation_rejection;     // mean fraction of [0, s] per chain state
    Vector occupation_conditioned;
    Vector occupation_diff;
    Vector occupation_se;
    double max_abs_diff = 0.0;
    double max_z = 0.0;
    double chi_square = 0.0;         // two-sample statistic on jump counts in [0, s]
    std::size_t dof = 0;
    double p_value = 1.0;
};

// Occupation fractions of [0, s] per chain state and the histogram of jump
// counts in [0, s], from the origin (0,0).
struct OccupationSample {
    std::size_t proposals = 0;
    std::size_t kept = 0;
    std::vector<Estimate> fractions;
    std::vector<std::size_t> jump_counts;
};

// X^T by rejection: original paths with tau > T, cut to [0, s]. Throws
// InfeasibleError when fewer than 1e-4 of the proposals survive.
OccupationSample occupation_rejection(const ChainSpec& spec, double horizon_T, double window, std::size_t n_paths,
                                      std::uint64_t seed, McOptions opt = {});
OccupationSample occupation_conditioned(const ConditionedChain& cond, double window, std::size_t n_paths,
                                        std::uint64_t seed, McOptions opt = {});
DivergenceReport compare_occupation(const OccupationSample& rejection, const OccupationSample& conditioned);
std::string occupation_csv(const OccupationSample& s);

DivergenceReport conditioned_vs_rejection(const ChainSpec& spec, const ConditionedChain& cond, double horizon_T,
                                          double window, std::size_t n_paths, std::uint64_t seed,
                                          McOptions opt = {});

struct SubexpPoint {
    double t;
    double ratio;              // Fbar^{n*}(t) / Fbar(t)
    std::size_t tail_count;    // samples beyond t
};

struct SubexpDiagnostic {
    std::vector<SubexpPoint> curve;   // observable range only
    double last_decade_max = 0.0;
    double bound = 0.0;               // n (1 + tolerance)
    bool consistent = false;
    bool unreliable = false;
    bool degenerate = false;
};

inline constexpr double kSubexpTolerance = 0.25;
inline constexpr std::size_t kMinTailSamples = 50;

// Observable range: t below `censor` with at least kMinTailSamples samples beyond t.
SubexpDiagnostic subexp_diagnostic(const Vector& samples, std::size_t order, const Vector& t_grid,
                                   std::uint64_t seed, double tolerance = kSubexpTolerance,
                                   double censor = std::numeric_limits<double>::infinity());

// First entry times to the origin from interior `state`, censored at `horizon`
// (a censored sample is reported as `horizon`).
Vector sample_hitting_times(const ChainSpec& spec, std::size_t state, std::size_t n, double horizon,
                            std::uint64_t seed, McOptions opt = {});

// Geometric grid of `count` points from lo to hi.
Vector log_grid(double lo, double hi, std::size_t count);

std::string estimates_csv(const Vector& t_grid, const std::vector<Estimate>& est);

}  // namespace holdtime
