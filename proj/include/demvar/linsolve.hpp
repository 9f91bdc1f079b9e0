#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/eigen.hpp>

#include <stdexcept>
#include <vector>

#include "demvar/scalar.hpp"

namespace demvar {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Dense direct solve. Full pivoting for rationals (always succeeds on
// nonsingular systems, no magnitude heuristics); partial pivoting for doubles.
inline Vec<double> solve_dense(const Mat<double>& A, const Vec<double>& b) {
    Eigen::PartialPivLU<Mat<double>> lu(A);
    return lu.solve(b);
}
inline Vec<Rational> solve_dense(const Mat<Rational>& A, const Vec<Rational>& b) {
    Eigen::FullPivLU<Mat<Rational>> lu(A);
    if (!lu.isInvertible()) throw std::runtime_error("singular linear system");
    return lu.solve(b);
}

// One row of x = M x + c: entries hold M_ij for j != i, diag holds 1 - M_ii.
struct SparseRow {
    std::vector<std::pair<int, double>> entries;
    double diag = 1.0;
};

// Gauss-Seidel for x = M x + c systems too large for dense factorization;
// converges for the substochastic systems produced by absorbing chains.
inline std::vector<double> gauss_seidel(const std::vector<SparseRow>& rows,
                                        const std::vector<double>& c,
                                        double residual_tol = 1e-12,
                                        long long max_sweeps = 1'000'000) {
    int n = static_cast<int>(rows.size());
    std::vector<double> x(n, 0.0);
    for (long long sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0;
        for (int i = 0; i < n; ++i) {
            double acc = c[i];
            for (const auto& [j, coef] : rows[i].entries) acc += coef * x[j];
            acc /= rows[i].diag;
            max_delta = std::max(max_delta, std::abs(acc - x[i]));
            x[i] = acc;
        }
        if (max_delta <= residual_tol) return x;
    }
    throw std::runtime_error("iterative solve did not converge");
}

}  // namespace demvar
