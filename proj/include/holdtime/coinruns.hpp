#pragma once

#include <optional>
#include <string>
#include <vector>

namespace holdtime {

inline constexpr double kCoinTolerance = 1e-12;

// Largest root in (0,1) of x^k - q sum_{j<k} p^j x^{k-1-j}.
double coin_root(double p, int k);

// c_k = (s_k - p) / (q ((k+1) s_k - k)).
double coin_constant(double p, int k, double s_k);

// Probability of no run of k or more heads in n tosses.
double coin_exact(double p, int k, int n);

struct CoinRow {
    int n;
    double exact;
    double asymptote;   // c_k s_k^{n+1}
    double rel_error;
};

struct CoinResult {
    double p = 0.5;
    int k = 1;
    double s_k = 0.0;
    std::optional<double> c_k;    // missing when the formula degenerates
    bool degenerate = false;      // k = 1: a run starts with the first head
    std::vector<CoinRow> table;
};

// Root, constant and the table for n = 0..n_max.
CoinResult analyze_coin(double p, int k, int n_max = -1);
std::string coin_table_csv(const CoinResult& r);

struct PoissonResult {
    double r = 1.0;
    double phi = 1.0;
    double c = 2.0;
};

// Companion root of x e^{-x} = r e^{-r} and the constant (phi - r) / (r (phi - 1)).
PoissonResult poisson_phi(double r);

}  // namespace holdtime
