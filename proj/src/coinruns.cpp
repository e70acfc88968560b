#include "holdtime/coinruns.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "holdtime/errors.hpp"

namespace holdtime {

namespace {

void check_coin(double p, int k) {
    if (!(p > 0.0 && p < 1.0)) throw PreconditionError("head probability must lie in (0,1)");
    if (k < 1) throw PreconditionError("run length must be at least 1");
}

double run_poly(double p, int k, double x) {
    // Horner on sum_j p^j x^{k-1-j}.
    double acc = 0.0;
    double pj = 1.0;
    for (int j = 0; j < k; ++j) {
        acc = acc * x + pj;
        pj *= p;
    }
    return std::pow(x, k) - (1.0 - p) * acc;
}

// Bisection to full double precision (well inside the 1e-12 contract).
template <class F>
double bisect(F&& f, double lo, double hi) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) throw NumericError("no sign change on the bisection bracket");
    for (int it = 0; it < 4000; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double coin_root(double p, int k) {
    check_coin(p, k);
    auto f = [&](double x) { return run_poly(p, k, x); };
    // The root is unique on (0, inf); it lies above p exactly when f(p) < 0.
    if (f(p) < 0.0) return bisect(f, p, 1.0);
    return bisect(f, 0.0, p);
}

double coin_constant(double p, int k, double s_k) {
    check_coin(p, k);
    const double denom = (1.0 - p) * ((k + 1) * s_k - k);
    if (std::abs(denom) < 1e-12) throw NumericError("coin constant denominator vanishes");
    return (s_k - p) / denom;
}

double coin_exact(double p, int k, int n) {
    check_coin(p, k);
    if (n < 0) throw PreconditionError("number of tosses must be >= 0");
    if (n < k) return 1.0;
    const double q = 1.0 - p;
    // run[r] = P(no k-run yet, current head run has length r)
    std::vector<double> run(static_cast<std::size_t>(k), 0.0), next(run.size());
    run[0] = 1.0;
    for (int t = 0; t < n; ++t) {
        double total = 0.0;
        for (double v : run) total += v;
        next[0] = q * total;
        for (int r = 1; r < k; ++r) next[static_cast<std::size_t>(r)] = p * run[static_cast<std::size_t>(r - 1)];
        run.swap(next);
    }
    double total = 0.0;
    for (double v : run) total += v;
    return total;
}

CoinResult analyze_coin(double p, int k, int n_max) {
    CoinResult r;
    r.p = p;
    r.k = k;
    r.s_k = coin_root(p, k);
    r.degenerate = k == 1;
    try {
        r.c_k = coin_constant(p, k, r.s_k);
    } catch (const NumericError&) {
        r.degenerate = true;
    }
    for (int n = 0; n <= n_max; ++n) {
        CoinRow row{n, coin_exact(p, k, n), std::nan(""), std::nan("")};
        if (r.c_k) {
            row.asymptote = *r.c_k * std::pow(r.s_k, n + 1);
            row.rel_error = std::abs(row.asymptote - row.exact) / row.exact;
        }
        r.table.push_back(row);
    }
    return r;
}

std::string coin_table_csv(const CoinResult& r) {
    std::ostringstream os;
    os << std::setprecision(15);
    os << "n,exact,asymptote,rel_error\n";
    for (const auto& row : r.table) {
        os << row.n << ',' << row.exact << ',';
        if (r.c_k) os << row.asymptote << ',' << row.rel_error;
        else os << ',';
        os << '\n';
    }
    return os.str();
}

PoissonResult poisson_phi(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw PreconditionError("Poisson rate must be positive");
    PoissonResult out;
    out.r = r;
    if (r == 1.0) return out;
    // log x - x = log r - r, compared in logs to keep accuracy near x = 1.
    const double target = std::log(r) - r;
    auto f = [&](double x) { return std::log(x) - x - target; };
    double phi;
    if (r > 1.0) {
        phi = bisect(f, 1e-300, 1.0);
    } else {
        double hi = 10.0;
        while (f(hi) > 0.0) hi *= 2.0;
        phi = bisect(f, 1.0, hi);
    }
    out.phi = phi;
    out.c = (phi - r) / (r * (phi - 1.0));
    return out;
}

}  // namespace holdtime
