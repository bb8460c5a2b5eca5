#pragma once

// Ideal-gas closed forms (Boltzmann constant 1) and a boxed-gas fixture that
// pushes the same quantities through the generic CGF engine.

#include <cstdint>

#include "stochecon/ldp.hpp"
#include "stochecon/types.hpp"

namespace stochecon {

struct GasSpec {
    double m = 1.0;  // particle mass
    std::int64_t n = 1;
    double beta = 1.0;  // inverse temperature
};

void validate_gas(const GasSpec& spec);

/// log lambda(beta) = (3/2)(log 2 pi m - log beta), per particle.
double gas_partition(const GasSpec& spec);

/// E = n * 3 / (2 beta).
double gas_internal_energy(const GasSpec& spec);

struct GasEntropy {
    double from_partition = 0.0;  // n (log lambda + beta e)
    double closed_form = 0.0;     // (3n/2)(-log beta + log 2 pi e m)
};

GasEntropy gas_entropy(const GasSpec& spec);

/// Maxwell-Boltzmann momentum density (2 pi m)^{-3/2} beta^{3/2} e^{-beta |theta|^2 / 2m}.
double gas_canonical_pdf(const Vector& theta, const GasSpec& spec);

/// Uniform law on [-radius, radius]^3 with a tensor trapezoid rule.
MicroDistribution boxed_gas_micro(double radius, int points_per_axis);

/// Kinetic energy u(theta) = |theta|^2 / 2m as a scalar structure function.
StructureFunction kinetic_energy_structure(double m);

struct GasFixture {
    CGFValue cgf;                // generic engine at alpha = -beta
    double log_box_volume = 0.0;
    double log_lambda = 0.0;     // cgf.log_lambda + log V
    double energy = 0.0;         // tilted mean of u, per particle
    double entropy = 0.0;        // n (log_lambda + beta energy)
};

/// Throws TruncationTooTight when radius < 8 sqrt(m / beta).
GasFixture gas_cgf_fixture(const GasSpec& spec, double radius, int points_per_axis);

}  // namespace stochecon
