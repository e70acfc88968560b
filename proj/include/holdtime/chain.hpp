#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "holdtime/errors.hpp"

namespace holdtime {

struct RateEntry {
    std::size_t from;
    std::size_t to;
    double rate;

    friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

// Finite continuous-time chain on {0, ..., n-1} with distinguished state 0.
//
// Off-diagonal rates are stored densely; the diagonal is implicit, q_i being
// the row sum. A rate from 0 to itself is allowed and means "leave 0 and come
// straight back": the holding clock restarts (this is how a Poisson process is
// written as a chain). States listed in the truncation boundary are the
// reflecting top of a truncated infinite chain; hitting analyses treat
// reaching them as escape to infinity.
class ChainSpec {
public:
    static ChainSpec create(std::size_t n_states, const std::vector<RateEntry>& rates,
                            double wait_threshold = 1.0,
                            std::vector<std::size_t> truncation_boundary = {});

    static ValidationReport validate(std::size_t n_states, const std::vector<RateEntry>& rates,
                                     double wait_threshold,
                                     const std::vector<std::size_t>& truncation_boundary);

    std::size_t n_states() const noexcept { return n_; }
    std::size_t n_interior() const noexcept { return n_ - 1; }

    double rate(std::size_t i, std::size_t j) const { return rates_[i * n_ + j]; }
    double exit_rate(std::size_t i) const { return exit_[i]; }
    double q0() const { return exit_[0]; }
    double self_return_rate() const { return rates_[0]; }
    double wait_threshold() const noexcept { return threshold_; }

    const std::vector<std::size_t>& truncation_boundary() const noexcept { return boundary_; }
    bool is_boundary(std::size_t i) const;
    bool has_boundary() const noexcept { return !boundary_.empty(); }

    // Positive off-diagonal entries (plus the origin self-return), row-major.
    std::vector<RateEntry> entries() const;
    // N_0: interior states with a direct rate into 0.
    std::vector<std::size_t> into_origin() const;
    // N_0^*: interior states reachable from 0 in one jump.
    std::vector<std::size_t> origin_targets() const;

    // Same chain with every rate multiplied by c and the threshold divided by c.
    ChainSpec rescaled(double c) const;

    friend bool operator==(const ChainSpec&, const ChainSpec&) = default;

private:
    ChainSpec() = default;

    std::size_t n_ = 0;
    double threshold_ = 1.0;
    std::vector<double> rates_;
    std::vector<double> exit_;
    std::vector<std::size_t> boundary_;
};

// Either a scalar rate or one rate per state.
using RateProfile = std::variant<double, std::vector<double>>;

// Nearest-neighbour chain on {0, ..., n}: q_{i,i+1} = b_i for 1 <= i < n,
// q_{i,i-1} = d_i for 1 <= i <= n, q_{0,j} from origin_exits. State n reflects
// and is recorded as the truncation boundary. Per-state lists are indexed from
// state 1 (b needs n-1 entries, d needs n).
ChainSpec build_birth_death(const RateProfile& b, const RateProfile& d, std::size_t n,
                            const std::vector<std::pair<std::size_t, double>>& origin_exits,
                            double wait_threshold = 1.0);

// Chain-spec JSON document: {"n_states", "rates": [[i, j, rate], ...],
// "wait_threshold"?, "truncation_boundary"?} or the generator form
// {"birth_death": {"b", "d", "n", "origin_exits"}, "wait_threshold"?}.
ChainSpec parse_spec(std::string_view text);
ChainSpec load_spec(const std::string& path);
std::string emit_spec(const ChainSpec& spec);

// Either an interior state or the origin with its current holding time.
struct Interior {
    std::size_t state;
    friend bool operator==(const Interior&, const Interior&) = default;
};
struct AtOrigin {
    double clock;
    friend bool operator==(const AtOrigin&, const AtOrigin&) = default;
};
using AugmentedState = std::variant<Interior, AtOrigin>;

// Throws PreconditionError when the state is outside the augmented space.
void check_state(const ChainSpec& spec, const AugmentedState& s);
std::string to_string(const AugmentedState& s);
// "3" -> Interior{3}; "0:0.25" or "0" -> AtOrigin.
AugmentedState parse_state(std::string_view text);

}  // namespace holdtime
