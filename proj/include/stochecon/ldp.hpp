#pragma once

// Cumulant generating functions of individual excess demand, conjugate
// variables, economic entropy and possible-equilibrium-price diagnostics.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochecon/types.hpp"

namespace stochecon {

/// log lambda(alpha; p) with the mean and covariance of z under the
/// alpha-tilted law (= gradient and Hessian of log lambda).
struct CGFValue {
    double log_lambda = 0.0;
    Vector grad;
    Matrix hess;
};

/// Support table of a discrete (or quadrature) law: one row of z values per
/// support point and the matching log-probabilities.
struct SupportTable {
    Matrix z;
    Vector log_q;
};

SupportTable support_table(const EconomyModel& model, const Price& p);

/// Stacked (z, x - x_shift) table for composite equilibria.
SupportTable stacked_table(const EconomyModel& model, const MacroStructure& x, const Price& p,
                           const Vector& x_shift);

CGFValue cgf(const SupportTable& table, const Vector& alpha);
CGFValue cgf(const EconomyModel& model, const Vector& alpha, const Price& p);

/// Tilted support weights q_k e^{alpha.z_k} / lambda.
Vector tilted_weights(const SupportTable& table, const Vector& alpha);

struct ConjugateSolution {
    Vector alpha;
    double log_lambda_min = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    Matrix hess;
};

inline constexpr double kConjugateTolerance = 1e-10;

ConjugateSolution solve_conjugate(const SupportTable& table);
ConjugateSolution solve_conjugate(const EconomyModel& model, const Price& p);

struct PepResult {
    bool possible = false;
    /// Direction d with d.z_k <= 0 for every support point when not possible.
    std::optional<Vector> certificate;
};

/// Is 0 in the topological interior of the convex hull of the rows of z?
PepResult check_pep(const Matrix& z);
PepResult check_pep(const EconomyModel& model, const Price& p);

struct EntropyReport {
    Price p;
    std::int64_t n = 0;
    double I = 0.0;               // nats
    double per_agent_rate = 0.0;  // -log lambda
    Vector alpha{};
    double log_lambda = 0.0;
    // Composite (bivariate) case.
    std::optional<Vector> x{};
    std::optional<Vector> beta{};
};

EntropyReport entropy(const EconomyModel& model, const Price& p);

CGFValue bivariate_cgf(const EconomyModel& model, const Vector& alpha, const Vector& beta, const Price& p,
                       const MacroStructure& x);

struct BivariateConjugate {
    Vector alpha;
    Vector beta;
    double log_lambda = 0.0;  // log lambda(alpha, beta; p), uncentered
    Vector target_x;
    double grad_norm = 0.0;
};

BivariateConjugate solve_bivariate_conjugate(const EconomyModel& model, const Price& p, const MacroStructure& x,
                                             const Vector& target_x);

/// I(p, x) = n (-log lambda(alpha, beta; p) + beta.x).
EntropyReport bivariate_entropy(const EconomyModel& model, const Price& p, const MacroStructure& x,
                                const Vector& target_x);

/// l = 1 search for the price minimizing I(p, x): best grid point, then
/// golden-section refinement to 1e-6 between its neighbours.
Price minimize_entropy_over_price(const EconomyModel& model, const MacroStructure& x, const Vector& target_x,
                                  std::span<const double> grid);

struct Corollary4Report {
    double e2_min = 0.0;
    double e2_max = 0.0;
    double a1_min = 0.0;
    bool e2_bounded_away = false;
    bool a1_bounded_away = false;
    double delta = 0.0;  // a1_min * e2_min / e2_max, 0 when a condition fails
    // Surrogate for positivity of the prior density at (p*_e, 1).
    double nearest_balanced_distance = 0.0;
    double radius = 0.0;
    bool balanced_atom_within_radius = false;
};

Corollary4Report corollary4_diagnostic(const EconomyModel& model, double radius = 0.1);

struct FullRankReport {
    std::size_t atom = 0;
    double z_norm = 0.0;
    int rank = 0;
    double smallest_singular_value = 0.0;
    Vector singular_values;
};

/// Rank of dz/dtheta (central differences) at the support atom with the
/// smallest |z(theta; p)|.
FullRankReport full_rank_diagnostic(const EconomyModel& model, const Price& p);

}  // namespace stochecon
