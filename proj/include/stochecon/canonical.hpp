#pragma once

// Canonical (exponentially tilted) micro laws f(theta|p) = e^{alpha.z} f / lambda.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stochecon/ldp.hpp"
#include "stochecon/types.hpp"

namespace stochecon {

class CanonicalMicro {
public:
    const MicroDistribution& base() const noexcept { return base_; }
    const Vector& alpha() const noexcept { return alpha_; }
    const std::optional<Vector>& beta() const noexcept { return beta_; }
    const Price& price() const noexcept { return p_; }
    double log_lambda() const noexcept { return log_lambda_; }
    bool is_discrete() const noexcept { return !weights_.empty(); }

    /// Tilted weights aligned with base().support_points() (exact path).
    const std::vector<double>& weights() const;
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// Draws one characteristic (inverse CDF, or rejection for continuous bases).
    Characteristics sample(rng::Stream& stream) const;
    /// Index of a drawn support point (exact path only).
    std::size_t sample_index(rng::Stream& stream) const;

    friend CanonicalMicro make_canonical(const EconomyModel& model, const Price& p);
    friend CanonicalMicro make_bivariate_canonical(const EconomyModel& model, const Price& p,
                                                   const MacroStructure& x, const Vector& target_x);
    friend CanonicalMicro tilt_discrete(const MicroDistribution& base, const StructureFunction& structure,
                                        const Price& p, const Vector& alpha);

private:
    CanonicalMicro(MicroDistribution base, Price p) : base_(std::move(base)), p_(std::move(p)) {}

    void set_weights_from_log(const Vector& log_w);

    MicroDistribution base_;
    Vector alpha_;
    std::optional<Vector> beta_;
    Price p_;
    double log_lambda_ = 0.0;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
    std::vector<std::string> warnings_;
    // Continuous rejection sampler.
    std::function<double(const Characteristics&)> log_accept_;
};

/// Canonical law at p. Discrete/quadrature bases get exact tilted weights;
/// a pure-sampler base with a support box gets a rejection sampler whose
/// envelope comes from a 64-point-per-axis grid maximisation.
CanonicalMicro make_canonical(const EconomyModel& model, const Price& p);

/// Canonical law of the composite equilibrium (p, x).
CanonicalMicro make_bivariate_canonical(const EconomyModel& model, const Price& p, const MacroStructure& x,
                                        const Vector& target_x);

/// Tilt of a discrete base by an arbitrary alpha (no conjugate solve).
CanonicalMicro tilt_discrete(const MicroDistribution& base, const StructureFunction& structure, const Price& p,
                             const Vector& alpha);

/// Re-expresses tilted weights as a fresh discrete law over the same atoms.
MicroDistribution as_discrete_law(const CanonicalMicro& canon);

std::vector<Characteristics> sample_canonical(const CanonicalMicro& canon, std::size_t count, std::uint64_t seed);

/// Exact sum over tilted support weights.
double canonical_expectation(const CanonicalMicro& canon, const std::function<double(const Characteristics&)>& g);

inline constexpr double kWeightFloor = 1e-300;

}  // namespace stochecon
