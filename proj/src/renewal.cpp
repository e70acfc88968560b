#include "holdtime/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace holdtime {

namespace {

// Integer n with n * unit == x to within 1e-9 relative, or nullopt.
std::optional<std::size_t> aligned_steps(double x, double unit) {
    double r = x / unit;
    double n = std::round(r);
    if (n < 0.0 || std::abs(n - r) > 1e-9 * std::max(1.0, r)) return std::nullopt;
    return static_cast<std::size_t>(n);
}

// sigma(s) = q_{0,C}^T e^{Q s} q_{C,0} (return-time density times q_0) and
// Sigma(s) = q_{0,C}^T e^{Q s} 1 (its tail integral), sampled every `step`.
struct ReturnKernels {
    Vector sigma;
    Vector tail;
};

ReturnKernels return_kernels(const ChainSpec& spec, double step, std::size_t count, double offset = 0.0) {
    auto gen = KilledGenerator::from_chain(spec);
    ReturnKernels k;
    k.sigma.assign(count, 0.0);
    k.tail.assign(count, 0.0);
    const std::size_t n = gen.size();
    if (n == 0) return k;

    Vector w(n);
    for (std::size_t a = 0; a < n; ++a) w[a] = spec.rate(0, gen.states[a]);
    if (offset > 0.0) {
        Matrix qt(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) qt(i, j) = gen.q(j, i);
        w = expm_action(qt, gen.max_exit_rate(), w, offset);
    }
    Matrix e = expm_matrix(gen, step);
    for (std::size_t m = 0; m < count; ++m) {
        double s = 0.0, t = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            s += w[a] * gen.to_origin[a];
            t += w[a];
        }
        k.sigma[m] = s;
        k.tail[m] = t;
        if (m + 1 < count) w = e.apply_transpose(w);
    }
    return k;
}

// Composite Simpson of e^{-q0 v} f(top - v) over v in [0, 2p h], with f sampled
// on the fine grid and `top` a fine index.
double simpson_tilted(const Vector& f, std::size_t top, std::size_t two_p, double h, double q0) {
    if (two_p == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t m = 0; m <= two_p; ++m) {
        double w = (m == 0 || m == two_p) ? 1.0 : (m % 2 ? 4.0 : 2.0);
        acc += w * std::exp(-q0 * static_cast<double>(m) * h) * f[top - m];
    }
    return acc * h / 3.0;
}

// Grid quantities for an origin window of length `window` (theta for the
// (0,0) curve, theta - u for (0,u)).
struct WindowTerms {
    Vector g;      // g_W(t_k)
    Vector tail;   // int_{t_k}^inf g_W
    Vector hold;   // int_0^{min(t_k, W)} e^{-q0 v} Sigma(t_k - v) dv
};

WindowTerms window_terms(const ChainSpec& spec, const ReturnKernels& k, std::size_t grid, double dt,
                         std::size_t window_steps) {
    const double q0 = spec.q0();
    const double q00 = spec.self_return_rate();
    const double h = dt / 4.0;
    const double window = static_cast<double>(window_steps) * dt;
    WindowTerms w;
    w.g.assign(grid, 0.0);
    w.tail.assign(grid, 0.0);
    w.hold.assign(grid, 0.0);
    for (std::size_t kk = 0; kk < grid; ++kk) {
        const double t = static_cast<double>(kk) * dt;
        const std::size_t span = 4 * std::min(kk, window_steps);
        double self = 0.0;
        if (kk < window_steps)
            self = q00 * std::exp(-q0 * t);
        else if (kk == window_steps)
            self = 0.5 * q00 * std::exp(-q0 * t);
        w.g[kk] = simpson_tilted(k.sigma, 4 * kk, span, h, q0) + self;
        w.hold[kk] = simpson_tilted(k.tail, 4 * kk, span, h, q0);
        w.tail[kk] = w.hold[kk] + std::max(std::exp(-q0 * t) - std::exp(-q0 * window), 0.0);
    }
    return w;
}

// dt [ g_0 v_k / 2 + sum_{j=1}^{k-1} g_j v_{k-j} + g_k v_0 / 2 ], k >= 1.
double trapezoid_conv(const Vector& kernel, const Vector& v, std::size_t k, double dt) {
    if (k == 0) return 0.0;
    double acc = 0.5 * (kernel[0] * v[k] + kernel[k] * v[0]);
    for (std::size_t j = 1; j < k; ++j) acc += kernel[j] * v[k - j];
    return acc * dt;
}

struct Grid {
    std::size_t points;
    std::size_t theta_steps;
};

Grid check_grid(const ChainSpec& spec, double t_max, double dt) {
    const double theta = spec.wait_threshold();
    if (!(dt > 0.0) || dt > theta / 50.0 * (1.0 + 1e-12))
        throw PreconditionError("renewal step too coarse: need dt <= theta/50");
    auto ts = aligned_steps(theta, dt);
    if (!ts) throw PreconditionError("renewal grid must contain theta: theta/dt must be an integer");
    if (!(t_max >= theta)) throw PreconditionError("renewal horizon must reach theta");
    auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
    return {steps + 1, *ts};
}

}  // namespace

double g_density(const ChainSpec& spec, double t, std::optional<double> step) {
    if (t < 0.0) throw PreconditionError("g_density needs t >= 0");
    const double theta = spec.wait_threshold();
    const double q0 = spec.q0();
    double self = 0.0;
    if (t < theta) self = spec.self_return_rate() * std::exp(-q0 * t);
    const double len = std::min(t, theta);
    if (len == 0.0) return self;

    double h = step.value_or(theta / 400.0);
    auto pairs = static_cast<std::size_t>(std::ceil(len / (2.0 * h)));
    const std::size_t two_p = 2 * std::max<std::size_t>(pairs, 1);
    h = len / static_cast<double>(two_p);
    auto k = return_kernels(spec, h, two_p + 1, t - len);
    return simpson_tilted(k.sigma, two_p, two_p, h, q0) + self;
}

Vector g_on_grid(const ChainSpec& spec, double t_max, double dt) {
    auto grid = check_grid(spec, t_max, dt);
    auto k = return_kernels(spec, dt / 4.0, 4 * (grid.points - 1) + 1);
    return window_terms(spec, k, grid.points, dt, grid.theta_steps).g;
}

SurvivalCurve solve_renewal(const ChainSpec& spec, double t_max, double dt) {
    auto grid = check_grid(spec, t_max, dt);
    const std::size_t n = grid.points;
    auto kern = return_kernels(spec, dt / 4.0, 4 * (n - 1) + 1);
    auto w = window_terms(spec, kern, n, dt, grid.theta_steps);

    const double jump = std::exp(-spec.q0() * spec.wait_threshold());
    // s = jump * 1(t < theta) + v, with v continuous:
    // v = tail + jump * (tail((t - theta)+) - tail(t)) + g * v.
    Vector v(n, 0.0);
    const double diag = 1.0 - 0.5 * dt * w.g[0];
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t back = k > grid.theta_steps ? k - grid.theta_steps : 0;
        double f = w.tail[k] + jump * (w.tail[back] - w.tail[k]);
        if (k == 0) {
            v[0] = f;
            continue;
        }
        double acc = 0.5 * w.g[k] * v[0];
        for (std::size_t j = 1; j < k; ++j) acc += w.g[j] * v[k - j];
        v[k] = (f + dt * acc) / diag;
    }

    SurvivalCurve out;
    out.dt = dt;
    out.start = AtOrigin{0.0};
    out.origin_jump = jump;
    out.theta = spec.wait_threshold();
    out.values.resize(n);
    double running = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        double s = v[k] + (k < grid.theta_steps ? jump : 0.0);
        s = std::clamp(s, 0.0, 1.0);
        running = std::min(running, s);
        out.values[k] = running;
    }
    return out;
}

SurvivalCurve lift_survival(const ChainSpec& spec, const SurvivalCurve& base, const AugmentedState& start) {
    check_state(spec, start);
    if (base.size() == 0) throw PreconditionError("base curve is empty");
    if (const auto* o = std::get_if<AtOrigin>(&base.start); !o || o->clock != 0.0)
        throw PreconditionError("lift_survival needs the (0,0) curve as its base");
    const double dt = base.dt;
    const std::size_t n = base.size();
    auto theta_steps = aligned_steps(spec.wait_threshold(), dt);
    if (!theta_steps || std::abs(base.theta - spec.wait_threshold()) > 1e-12)
        throw PreconditionError("base curve does not belong to this spec");

    Vector v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = base.values[k] - (k < *theta_steps ? base.origin_jump : 0.0);

    SurvivalCurve out = base;
    out.start = start;

    if (const auto* o = std::get_if<AtOrigin>(&start)) {
        auto u_steps = aligned_steps(o->clock, dt);
        if (!u_steps) throw PreconditionError("origin clock must be a multiple of the grid step");
        const std::size_t window = *theta_steps - *u_steps;
        auto kern = return_kernels(spec, dt / 4.0, 4 * (n - 1) + 1);
        auto w = window_terms(spec, kern, n, dt, window);
        const double q0 = spec.q0();
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) * dt;
            std::size_t back = k > *theta_steps ? k - *theta_steps : 0;
            double s = (k < window ? std::exp(-q0 * t) : 0.0) + w.hold[k] + trapezoid_conv(w.g, v, k, dt) +
                       base.origin_jump * (w.tail[back] - w.tail[k]);
            out.values[k] = std::clamp(s, 0.0, 1.0);
        }
        return out;
    }

    const std::size_t state = std::get<Interior>(start).state;
    auto gen = KilledGenerator::from_chain(spec);
    const std::size_t row = *gen.index_of(state);
    const std::size_t m = gen.size();
    Matrix e = expm_matrix(gen, dt);
    Vector rho(n), surv(n);
    Vector w(m, 0.0);
    w[row] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        double r = 0.0, s = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            r += w[a] * gen.to_origin[a];
            s += w[a];
        }
        rho[k] = r;
        surv[k] = s;
        if (k + 1 < n) w = e.apply_transpose(w);
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t back = k > *theta_steps ? k - *theta_steps : 0;
        double s = surv[k] + trapezoid_conv(rho, v, k, dt) + base.origin_jump * (surv[back] - surv[k]);
        out.values[k] = std::clamp(s, 0.0, 1.0);
    }
    return out;
}

std::string survival_csv(const SurvivalCurve& curve, std::optional<double> phi) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "t,s,scaled_s\n";
    for (std::size_t k = 0; k < curve.size(); ++k) {
        double t = curve.t(k);
        os << t << ',' << curve.values[k] << ',';
        if (phi) os << std::exp(*phi * t) * curve.values[k];
        os << '\n';
    }
    return os.str();
}

}  // namespace holdtime
