#include "holdtime/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace holdtime {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector Matrix::apply(std::span<const double> v) const {
    Vector out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = data_.data() + i * cols_;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Vector Matrix::apply_transpose(std::span<const double> v) const {
    Vector out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = data_.data() + i * cols_;
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t j = 0; j < cols_; ++j) out[j] += r[j] * vi;
    }
    return out;
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

LuFactor::LuFactor(Matrix m) : lu_(std::move(m)) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) throw PreconditionError("solve_linear needs a square matrix");
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(lu_(i, j)));
    const double floor = std::max(scale, 1.0) * static_cast<double>(n) * std::numeric_limits<double>::epsilon();

    min_pivot_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
        double piv = lu_(p, k);
        min_pivot_ = std::min(min_pivot_, std::abs(piv));
        if (std::abs(piv) <= floor)
            throw SingularMatrixError(piv, "matrix is singular to working precision (pivot " +
                                               std::to_string(piv) + " at column " + std::to_string(k) + ")");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            std::swap(perm_[k], perm_[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = lu_(i, k) / piv;
            lu_(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
    if (n == 0) min_pivot_ = 0.0;
}

Vector LuFactor::solve(std::span<const double> rhs) const {
    const std::size_t n = lu_.rows();
    if (rhs.size() != n) throw PreconditionError("right-hand side does not conform");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
        x[ii] /= lu_(ii, ii);
    }
    return x;
}

Vector solve_linear(const Matrix& m, std::span<const double> r) { return LuFactor(m).solve(r); }

std::optional<MMatrixFactor> MMatrixFactor::try_factor(Matrix m) {
    const std::size_t n = m.rows();
    for (std::size_t k = 0; k < n; ++k) {
        double piv = m(k, k);
        if (!(piv > 0.0) || !std::isfinite(piv)) return std::nullopt;
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m(i, k) / piv;
            m(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    MMatrixFactor out;
    out.lu_ = std::move(m);
    return out;
}

Vector MMatrixFactor::solve(std::span<const double> rhs) const {
    const std::size_t n = lu_.rows();
    Vector x(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
        x[ii] /= lu_(ii, ii);
    }
    return x;
}

KilledGenerator KilledGenerator::from_chain(const ChainSpec& spec, View view) {
    KilledGenerator g;
    for (std::size_t i = 1; i < spec.n_states(); ++i)
        if (view == View::Reflecting || !spec.is_boundary(i)) g.states.push_back(i);
    const std::size_t m = g.states.size();
    g.q = Matrix(m, m);
    g.to_origin.assign(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        std::size_t i = g.states[a];
        for (std::size_t b = 0; b < m; ++b)
            if (a != b) g.q(a, b) = spec.rate(i, g.states[b]);
        g.q(a, a) = -spec.exit_rate(i);
        g.to_origin[a] = spec.rate(i, 0);
    }
    return g;
}

double KilledGenerator::max_exit_rate() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, -q(i, i));
    return m;
}

std::optional<std::size_t> KilledGenerator::index_of(std::size_t state) const {
    auto it = std::lower_bound(states.begin(), states.end(), state);
    if (it == states.end() || *it != state) return std::nullopt;
    return static_cast<std::size_t>(it - states.begin());
}

PerronResult perron_eigen(const KilledGenerator& gen, double tol, int max_iter) {
    PerronResult res;
    const std::size_t n = gen.size();
    if (n == 0) {
        res.decay = std::numeric_limits<double>::infinity();
        return res;
    }

    Vector x(n, 1.0);
    double shift = 0.0;
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    double last_gap = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= max_iter; ++it) {
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = -gen.q(i, j);
        for (std::size_t i = 0; i < n; ++i) a(i, i) -= shift;
        auto f = MMatrixFactor::try_factor(std::move(a));
        res.iterations = it;
        if (!f) break;  // shift reached alpha to rounding
        Vector y = f->solve(x);

        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(y[i] > 0.0)) continue;
            double r = x[i] / y[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        if (!std::isfinite(lo)) break;
        lower = shift + lo;
        upper = shift + hi;
        double ymax = norm_inf(y);
        for (std::size_t i = 0; i < n; ++i) x[i] = std::max(y[i], 0.0) / ymax;

        double gap = upper - lower;
        double increment = lower - shift;
        shift = lower;
        if (gap <= tol * std::max(1.0, lower) || increment <= tol * std::max(1.0, lower)) break;
        if (gap >= last_gap && it > 50) break;  // stalled at rounding level
        last_gap = gap;
    }
    if (!std::isfinite(upper)) upper = lower;
    res.decay = 0.5 * (lower + upper);
    res.eigenvector = x;

    Vector qx = gen.q.apply(x);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(qx[i] + res.decay * x[i]));
    res.residual = r / norm_inf(x);
    const double bound = 1e-9 * (1.0 + gen.max_exit_rate());
    if (!(res.residual <= bound))
        throw ConvergenceError(res.residual, "Perron iteration did not converge (residual " +
                                                 std::to_string(res.residual) + ")");
    return res;
}

double perron_decay(const KilledGenerator& gen) { return perron_eigen(gen).decay; }

Vector expm_action(const Matrix& q, double lambda, std::span<const double> v, double t) {
    if (t < 0.0) throw PreconditionError("expm_action needs t >= 0");
    Vector out(v.begin(), v.end());
    if (t == 0.0 || lambda <= 0.0 || q.rows() == 0) return out;
    const double lt = lambda * t;
    if (lt > 1e4) throw NumericError("uniformization horizon t * max q_i = " + std::to_string(lt) + " exceeds 1e4");

    const std::size_t n = q.rows();
    // P = I + Q / lambda, applied on the fly.
    auto step = [&](const Vector& x) {
        Vector y = q.apply(x);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + y[i] / lambda;
        return y;
    };

    const double tol = 1e-10;
    const double log_lt = std::log(lt);
    Vector term(v.begin(), v.end());
    std::fill(out.begin(), out.end(), 0.0);
    double mass = 0.0;
    for (std::size_t k = 0;; ++k) {
        double w = std::exp(-lt + static_cast<double>(k) * log_lt - std::lgamma(static_cast<double>(k) + 1.0));
        if (w > 0.0)
            for (std::size_t i = 0; i < n; ++i) out[i] += w * term[i];
        mass += w;
        if (static_cast<double>(k) > lt && 1.0 - mass <= tol) break;
        if (k > static_cast<std::size_t>(lt + 50.0 * std::sqrt(lt) + 100.0)) break;
        term = step(term);
    }
    return out;
}

Vector expm_action(const KilledGenerator& gen, std::span<const double> v, double t) {
    if (v.size() != gen.size()) throw PreconditionError("expm_action vector does not conform");
    return expm_action(gen.q, gen.max_exit_rate(), v, t);
}

Matrix expm_matrix(const KilledGenerator& gen, double t) {
    const std::size_t n = gen.size();
    Matrix e(n, n);
    Vector unit(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        unit[j] = 1.0;
        Vector col = expm_action(gen, unit, t);
        for (std::size_t i = 0; i < n; ++i) e(i, j) = col[i];
        unit[j] = 0.0;
    }
    return e;
}

}  // namespace holdtime
