#include "stochecon/simplex_lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace stochecon::lp {

FeasibilityResult phase_one(const Matrix& a, const Vector& b, double tol)
{
    const auto rows = a.rows();
    const auto cols = a.cols();
    if (b.size() != rows) {
        raise(ErrorCode::DimensionMismatch, "right-hand side length differs from row count");
    }

    // Flip rows so that b >= 0, then append one artificial per row.
    Vector sign = Vector::Ones(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (b[i] < 0.0) {
            sign[i] = -1.0;
        }
    }
    const auto total = cols + rows;
    Matrix tab(rows + 1, total + 1);
    tab.setZero();
    tab.topLeftCorner(rows, cols) = sign.asDiagonal() * a;
    tab.block(0, cols, rows, rows).setIdentity();
    tab.col(total).head(rows) = sign.cwiseProduct(b);

    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
        basis[static_cast<std::size_t>(i)] = cols + i;
    }
    // Objective row holds reduced costs of min sum(artificials).
    for (Eigen::Index j = 0; j <= total; ++j) {
        tab(rows, j) = (j >= cols && j < total) ? 0.0 : -tab.col(j).head(rows).sum();
    }

    const double scale = std::max(1.0, b.lpNorm<1>());
    const double pivot_eps = 1e-12;
    const int max_pivots = 50 * static_cast<int>(total + 1);
    for (int it = 0; it < max_pivots; ++it) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < total; ++j) {
            if (tab(rows, j) < -pivot_eps) {
                enter = j;  // Bland: smallest index
                break;
            }
        }
        if (enter < 0) {
            break;
        }
        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double coef = tab(i, enter);
            if (coef > pivot_eps) {
                const double ratio = tab(i, total) / coef;
                if (ratio < best - 1e-15 ||
                    (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
                     basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) {
            break;  // cannot happen in phase I: objective is bounded below by 0
        }
        tab.row(leave) /= tab(leave, enter);
        for (Eigen::Index i = 0; i <= rows; ++i) {
            if (i != leave && tab(i, enter) != 0.0) {
                tab.row(i) -= tab(i, enter) * tab.row(leave);
            }
        }
        basis[static_cast<std::size_t>(leave)] = enter;
    }

    FeasibilityResult result;
    result.infeasibility = -tab(rows, total);
    result.feasible = result.infeasibility <= tol * scale;

    result.v = Vector::Zero(cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto j = basis[static_cast<std::size_t>(i)];
        if (j < cols) {
            result.v[j] = tab(i, total);
        }
    }

    // Phase-I duals: y' solves B^T y' = c_B on the sign-flipped system.
    Matrix basis_matrix(rows, rows);
    Vector cost(rows);
    const Matrix flipped = sign.asDiagonal() * a;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto j = basis[static_cast<std::size_t>(i)];
        if (j < cols) {
            basis_matrix.col(i) = flipped.col(j);
            cost[i] = 0.0;
        } else {
            basis_matrix.col(i) = Vector::Unit(rows, j - cols);
            cost[i] = 1.0;
        }
    }
    const Vector y_flipped = basis_matrix.transpose().fullPivLu().solve(cost);
    result.farkas_y = sign.cwiseProduct(y_flipped);
    return result;
}

}  // namespace stochecon::lp
