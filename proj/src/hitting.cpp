#include "holdtime/hitting.hpp"

#include <algorithm>
#include <cmath>

namespace holdtime {

namespace {

// Hit probabilities of 0 in the escape view, per chain state.
Vector escape_hit_prob(const ChainSpec& spec) {
    auto gen = KilledGenerator::from_chain(spec, KilledGenerator::View::Escape);
    Vector hit(spec.n_states(), 0.0);
    hit[0] = 1.0;
    if (gen.size() == 0) return hit;
    Matrix m(gen.size(), gen.size());
    for (std::size_t i = 0; i < gen.size(); ++i)
        for (std::size_t j = 0; j < gen.size(); ++j) m(i, j) = -gen.q(i, j);
    Vector h = solve_linear(m, gen.to_origin);
    for (std::size_t a = 0; a < gen.size(); ++a) hit[gen.states[a]] = std::clamp(h[a], 0.0, 1.0);
    return hit;
}

double delta_of(const ChainSpec& spec, const Vector& beta) {
    double acc = 0.0;
    for (std::size_t j = 1; j < spec.n_states(); ++j) acc += spec.rate(0, j) * beta[j];
    return acc / spec.q0();
}

}  // namespace

Vector never_hit_prob(const ChainSpec& spec) {
    Vector beta(spec.n_states(), 0.0);
    if (!spec.has_boundary()) return beta;
    Vector hit = escape_hit_prob(spec);
    for (std::size_t i = 1; i < spec.n_states(); ++i) beta[i] = 1.0 - hit[i];
    if (delta_of(spec, beta) <= kTransienceTolerance) std::fill(beta.begin(), beta.end(), 0.0);
    return beta;
}

bool is_transient(const ChainSpec& spec) {
    if (!spec.has_boundary()) return false;
    return delta_of(spec, never_hit_prob(spec)) > 0.0;
}

KilledGenerator::View hitting_view(const ChainSpec& spec) {
    return is_transient(spec) ? KilledGenerator::View::Escape : KilledGenerator::View::Reflecting;
}

MgfValue hitting_mgf(const ChainSpec& spec, double lambda) {
    return hitting_mgf(spec, lambda, hitting_view(spec));
}

MgfValue hitting_mgf(const ChainSpec& spec, double lambda, KilledGenerator::View view) {
    if (!(lambda >= 0.0)) throw PreconditionError("hitting_mgf needs lambda >= 0");
    MgfValue out;
    out.lambda = lambda;
    out.values.assign(spec.n_states(), 0.0);
    out.derivs.assign(spec.n_states(), 0.0);
    out.values[0] = 1.0;

    auto gen = KilledGenerator::from_chain(spec, view);
    const std::size_t n = gen.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = -gen.q(i, j);
    for (std::size_t i = 0; i < n; ++i) m(i, i) -= lambda;

    auto factor = MMatrixFactor::try_factor(std::move(m));
    if (!factor) {
        out.finite = false;
        return out;
    }
    Vector f = factor->solve(gen.to_origin);
    Vector df = factor->solve(f);
    for (std::size_t a = 0; a < n; ++a) {
        if (!(f[a] > 0.0) || !std::isfinite(f[a]) || !(df[a] >= 0.0) || !std::isfinite(df[a])) {
            out.finite = false;
            return out;
        }
        out.values[gen.states[a]] = f[a];
        out.derivs[gen.states[a]] = df[a];
    }
    out.finite = true;
    return out;
}

double bd_gamma(double b, double d, double lambda) {
    if (!(b > 0.0 && d > 0.0)) throw DomainError("bd_gamma needs positive rates");
    if (lambda < 0.0) throw DomainError("bd_gamma needs lambda >= 0");
    const double s = b + d - lambda;
    double disc = s * s - 4.0 * b * d;
    if (disc < 0.0) {
        if (disc > -1e-12 * (b + d) * (b + d) && s > 0.0)
            disc = 0.0;
        else
            throw DomainError("lambda exceeds b + d - 2 sqrt(bd); the hitting-time MGF is infinite");
    }
    if (s < 0.0) throw DomainError("lambda exceeds b + d - 2 sqrt(bd); the hitting-time MGF is infinite");
    return (s - std::sqrt(disc)) / (2.0 * b);
}

DecayParams decay_params(const ChainSpec& spec) {
    DecayParams out;
    out.transient = is_transient(spec);
    auto view = out.transient ? KilledGenerator::View::Escape : KilledGenerator::View::Reflecting;
    out.alpha_C = perron_decay(KilledGenerator::from_chain(spec, view));
    out.mu_C = out.transient ? 0.0 : out.alpha_C;
    return out;
}

HittingAnalysis analyze_hitting(const ChainSpec& spec) {
    HittingAnalysis ha;
    ha.beta = never_hit_prob(spec);
    ha.delta = delta_of(spec, ha.beta);
    ha.transient = ha.delta > 0.0;
    auto view = ha.transient ? KilledGenerator::View::Escape : KilledGenerator::View::Reflecting;
    ha.alpha_C = perron_decay(KilledGenerator::from_chain(spec, view));
    ha.mu_C = ha.transient ? 0.0 : ha.alpha_C;
    if (spec.has_boundary()) ha.truncation_level = spec.truncation_boundary().back();
    return ha;
}

Vector harmonic_vector_bd(const ChainSpec& spec) {
    const std::size_t n = spec.n_states();
    if (n < 2) throw StructureError("birth-death chain needs interior states");
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || spec.rate(i, j) == 0.0) continue;
            bool neighbour = (j + 1 == i) || (j == i + 1);
            if (!neighbour)
                throw StructureError("rate q(" + std::to_string(i) + "," + std::to_string(j) +
                                     ") breaks nearest-neighbour structure");
        }
        if (i + 1 < n && spec.rate(i, i + 1) <= 0.0)
            throw StructureError("birth rate at state " + std::to_string(i) + " is zero");
        if (spec.rate(i, i - 1) <= 0.0)
            throw StructureError("death rate at state " + std::to_string(i) + " is zero");
    }
    Vector h(n, 0.0);
    h[1] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        h[i + 1] = h[i] + spec.rate(i, i - 1) / spec.rate(i, i + 1) * (h[i] - h[i - 1]);
    return h;
}

double harmonic_residual(const ChainSpec& spec, const Vector& h, bool relative) {
    double worst = 0.0;
    for (std::size_t i = 1; i < spec.n_states(); ++i) {
        if (spec.is_boundary(i)) continue;
        double acc = -spec.exit_rate(i) * h[i];
        for (std::size_t j = 1; j < spec.n_states(); ++j)
            if (j != i) acc += spec.rate(i, j) * h[j];
        double r = std::abs(acc);
        if (relative && h[i] != 0.0) r /= std::abs(h[i]);
        worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace holdtime
