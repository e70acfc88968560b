#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "holdtime/chain.hpp"

namespace holdtime {

using Vector = std::vector<double>;

// Row-major dense matrix. Sizes here stay at desk scale (n <= 2000).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Vector apply(std::span<const double> v) const;
    Vector apply_transpose(std::span<const double> v) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// LU with partial pivoting. Throws SingularMatrixError carrying the offending
// pivot when a pivot falls below working precision relative to the matrix scale.
class LuFactor {
public:
    explicit LuFactor(Matrix m);
    Vector solve(std::span<const double> rhs) const;
    double min_abs_pivot() const noexcept { return min_pivot_; }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    double min_pivot_ = 0.0;
};

// Solves M x = r by pivoted elimination.
Vector solve_linear(const Matrix& m, std::span<const double> r);

// Elimination without pivoting for Z-matrices (nonpositive off-diagonals).
// Returns nullopt unless every pivot is strictly positive, i.e. unless the
// matrix is a nonsingular M-matrix.
class MMatrixFactor {
public:
    static std::optional<MMatrixFactor> try_factor(Matrix m);
    Vector solve(std::span<const double> rhs) const;

private:
    MMatrixFactor() = default;
    Matrix lu_;
};

// Generator of the chain killed on hitting 0, restricted to interior states.
// In the escape view the truncation boundary is removed as well, and mass
// reaching it is lost (it stands in for escape to infinity).
struct KilledGenerator {
    enum class View { Reflecting, Escape };

    Matrix q;                          // off-diagonals q_ij, diagonal -q_i
    Vector to_origin;                  // q_{i,0} per row
    std::vector<std::size_t> states;   // chain state behind each row

    static KilledGenerator from_chain(const ChainSpec& spec, View view = View::Reflecting);

    std::size_t size() const noexcept { return states.size(); }
    double max_exit_rate() const;
    // Row index of a chain state, or nullopt when it is not part of the view.
    std::optional<std::size_t> index_of(std::size_t state) const;
};

struct PerronResult {
    double decay = 0.0;      // alpha^C = -(dominant eigenvalue)
    Vector eigenvector;      // positive, max-normalised
    double residual = 0.0;   // ||Q x + alpha x||_inf / ||x||_inf
    int iterations = 0;
};

// Shifted inverse iteration for the dominant eigenvalue of the killed
// generator. The shift is the Collatz-Wielandt lower bound of the current
// iterate, so (-Q - shift) stays a nonsingular M-matrix and the iterates stay
// positive. Empty generators (no interior states) decay infinitely fast.
PerronResult perron_eigen(const KilledGenerator& gen, double tol = 1e-12, int max_iter = 10000);
double perron_decay(const KilledGenerator& gen);

// e^{Q t} v by uniformization; truncation error below 1e-10 ||v||_inf.
// Throws NumericError when t * max q_i exceeds 1e4.
Vector expm_action(const KilledGenerator& gen, std::span<const double> v, double t);
Vector expm_action(const Matrix& generator, double uniform_rate, std::span<const double> v, double t);

// e^{Q t} as a dense matrix (column by column through expm_action).
Matrix expm_matrix(const KilledGenerator& gen, double t);

double norm_inf(std::span<const double> v);

}  // namespace holdtime
