#pragma once

// Realized and expected equilibrium prices, survival counts.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stochecon/types.hpp"

namespace stochecon {

enum class EquilibriumMethod { Eigenvector, Bisection };

struct EquilibriumResult {
    Price price;
    Vector residual;  // Z(p*) in excess-demand units
    EquilibriumMethod method;
    bool unique = true;  // irreducibility verdict (eigenvector path)
    std::vector<std::string> warnings;
};

/// Cobb-Douglas equilibrium of a realized economy via the left eigenvector
/// of A^{jk} = (sum_i e_i^j)^{-1} sum_i a_i^k e_i^j.
EquilibriumResult cd_equilibrium(const Configuration& config, int l);

/// Same with multiplicities: agent k appears weights[k] times (weights may be
/// fractional, e.g. probabilities for the expected equilibrium).
EquilibriumResult cd_equilibrium_weighted(std::span<const Characteristics> agents, std::span<const double> weights,
                                          int l);

/// Normalized left eigenvector of a row-stochastic matrix. Sets irreducible.
Vector stationary_left_eigenvector(const Matrix& a, bool& irreducible, std::vector<std::string>& warnings);

/// Generic l = 1 path: bisection on p^1 for a decreasing scalar excess demand.
EquilibriumResult bisection_equilibrium(const Configuration& config, const StructureFunction& structure,
                                        double tol = 1e-10);
EquilibriumResult bisection_equilibrium_weighted(std::span<const Characteristics> agents,
                                                 std::span<const double> weights, const StructureFunction& structure,
                                                 double tol = 1e-10);

/// Dispatches to the eigenvector method for Cobb-Douglas and to bisection
/// for other l = 1 structures; NonCDModel otherwise.
EquilibriumResult realized_equilibrium(const StructureFunction& structure, std::span<const Characteristics> agents,
                                       std::span<const double> weights);

/// Expected equilibrium p*_e, the zero of E z(theta; p).
Price expected_equilibrium(const EconomyModel& model);

/// Survival wealth level w(p).
struct SurvivalSpec {
    std::function<double(const Price&)> w;

    static SurvivalSpec constant(double level);
};

/// Cobb-Douglas agent below the survival line: p.e < w(p) (strict).
bool is_non_surviving(const Characteristics& theta, const Price& p, const SurvivalSpec& spec);

/// Number of non-surviving agents N(p).
std::int64_t survival_count(const Configuration& config, const Price& p, const SurvivalSpec& spec);

}  // namespace stochecon
