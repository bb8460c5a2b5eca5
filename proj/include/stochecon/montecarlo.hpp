#pragma once

// Estimators for equilibrium-observation probabilities and conditional laws:
// naive Monte Carlo, canonical importance sampling, and exact enumeration.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stochecon/equilibrium.hpp"
#include "stochecon/types.hpp"

namespace stochecon {

enum class EstimateMethod { Naive, Importance, Oracle };

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    double log_value = 0.0;      // nats; -inf when value is 0
    double log_std_error = 0.0;  // delta method: std_error / value
    std::uint64_t replicas = 0;
    EstimateMethod method = EstimateMethod::Naive;
    bool zero_hits = false;  // naive run saw no event: switch to importance sampling
    std::vector<std::string> warnings;
};

struct EmpiricalDistribution {
    std::vector<double> frequencies;  // aligned with the micro support
    std::vector<double> std_errors;
    std::uint64_t accepted_count = 0;
    double weight_sum = 0.0;
};

struct McOptions {
    std::uint64_t replicas = 10000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency
    std::uint64_t chunk_size = 4096;
};

/// Fraction of prior-sampled economies whose equilibrium lies within delta
/// (sup norm) of p; binomial standard error.
Estimate naive_probability(const EconomyModel& model, const Price& p, double delta, const McOptions& opts);

/// Same probability estimated under the canonical law at p with likelihood
/// ratio exp(n log lambda(p) - alpha(p).Z(omega; p)).
Estimate importance_probability(const EconomyModel& model, const Price& p, double delta, const McOptions& opts);

/// Exact probability by enumerating atom-count vectors. TooLarge beyond
/// 1e7 count vectors.
Estimate oracle_probability(const EconomyModel& model, const Price& p, double delta);

/// Conditional distribution of characteristics given the equilibrium event.
EmpiricalDistribution conditional_empirical(const EconomyModel& model, const Price& p, double delta,
                                            const McOptions& opts, bool use_importance);
EmpiricalDistribution oracle_conditional_empirical(const EconomyModel& model, const Price& p, double delta);

struct MacroMeanEstimate {
    Estimate conditional;               // E(n^{-1} X(p*) | event)
    double canonical_prediction = 0.0;  // canonical expectation of x(theta; p)
};

/// Scalar macro variable (x.d == 1), evaluated at the realized equilibrium.
MacroMeanEstimate conditional_macro_mean(const EconomyModel& model, const Price& p, double delta,
                                         const MacroStructure& x, const McOptions& opts, bool use_importance);
MacroMeanEstimate oracle_conditional_macro_mean(const EconomyModel& model, const Price& p, double delta,
                                                const MacroStructure& x);

struct CltSeries {
    std::vector<std::int64_t> n;
    std::vector<Matrix> covariance;  // of sqrt(n)(p* - p*_e), first l coordinates
    Matrix sigma;                    // largest-n estimate
};

CltSeries clt_covariance(const EconomyModel& model, std::span<const std::int64_t> n_grid, const McOptions& opts);

/// Asymptotic covariance J^{-1} C J^{-T} of sqrt(n)(p* - p*_e): J is the
/// Jacobian of mean excess demand along the simplex coordinates p^1..p^l,
/// C the prior covariance of z at p*_e.
Matrix delta_method_sigma(const EconomyModel& model);

/// (n/2)(p - p*_e)^T Sigma^{-1} (p - p*_e) in nats.
double clt_entropy_approx(const EconomyModel& model, const Price& p, const Matrix& sigma);

/// Total-variation distance between two weight vectors.
double total_variation(std::span<const double> a, std::span<const double> b);

/// Number of atom-count vectors for n agents over k atoms, C(n+k-1, k-1),
/// saturating at the double range.
double count_vector_states(std::int64_t n, std::size_t k);

inline constexpr double kOracleStateLimit = 1e7;

}  // namespace stochecon
