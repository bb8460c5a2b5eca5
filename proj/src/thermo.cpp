#include "stochecon/thermo.hpp"

#include <cmath>
#include <numbers>

namespace stochecon {

void validate_gas(const GasSpec& spec)
{
    if (!(spec.m > 0.0) || !(spec.beta > 0.0) || spec.n < 1) {
        raise(ErrorCode::InvalidArgument, "gas needs m > 0, beta > 0 and n >= 1");
    }
}

double gas_partition(const GasSpec& spec)
{
    validate_gas(spec);
    return 1.5 * (std::log(2.0 * std::numbers::pi * spec.m) - std::log(spec.beta));
}

double gas_internal_energy(const GasSpec& spec)
{
    validate_gas(spec);
    return static_cast<double>(spec.n) * 1.5 / spec.beta;
}

GasEntropy gas_entropy(const GasSpec& spec)
{
    validate_gas(spec);
    const double n = static_cast<double>(spec.n);
    const double e = 1.5 / spec.beta;
    GasEntropy s;
    s.from_partition = n * (gas_partition(spec) + spec.beta * e);
    s.closed_form = 1.5 * n * (-std::log(spec.beta) + std::log(2.0 * std::numbers::pi * std::numbers::e * spec.m));
    return s;
}

double gas_canonical_pdf(const Vector& theta, const GasSpec& spec)
{
    validate_gas(spec);
    if (theta.size() != 3) {
        raise(ErrorCode::DimensionMismatch, "momentum must be a 3-vector");
    }
    const double norm = std::pow(2.0 * std::numbers::pi * spec.m / spec.beta, -1.5);
    return norm * std::exp(-spec.beta * theta.squaredNorm() / (2.0 * spec.m));
}

MicroDistribution boxed_gas_micro(double radius, int points_per_axis)
{
    if (!(radius > 0.0) || points_per_axis < 2) {
        raise(ErrorCode::InvalidArgument, "box needs a positive radius and at least two points per axis");
    }
    const int k = points_per_axis;
    const double h = 2.0 * radius / (k - 1);
    std::vector<double> axis(static_cast<std::size_t>(k));
    std::vector<double> w1(static_cast<std::size_t>(k), h / (2.0 * radius));
    for (int i = 0; i < k; ++i) {
        axis[static_cast<std::size_t>(i)] = -radius + i * h;
    }
    w1.front() *= 0.5;
    w1.back() *= 0.5;

    QuadratureRule rule;
    rule.reserve(static_cast<std::size_t>(k) * k * k);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            for (int c = 0; c < k; ++c) {
                Vector node(3);
                node << axis[static_cast<std::size_t>(a)], axis[static_cast<std::size_t>(b)],
                    axis[static_cast<std::size_t>(c)];
                rule.emplace_back(std::move(node), w1[static_cast<std::size_t>(a)] * w1[static_cast<std::size_t>(b)] *
                                                       w1[static_cast<std::size_t>(c)]);
            }
        }
    }

    ContinuousMicro spec;
    spec.dim = 3;
    spec.sampler = [radius](rng::Stream& s) {
        Vector t(3);
        for (int i = 0; i < 3; ++i) {
            t[i] = -radius + 2.0 * radius * s.uniform();
        }
        return t;
    };
    spec.quadrature = std::move(rule);
    spec.support_box = std::make_pair(Vector::Constant(3, -radius), Vector::Constant(3, radius));
    return MicroDistribution::continuous(std::move(spec));
}

StructureFunction kinetic_energy_structure(double m)
{
    if (!(m > 0.0)) {
        raise(ErrorCode::InvalidArgument, "mass must be positive");
    }
    auto eval = [m](const Characteristics& theta, const Price&) {
        Vector u(1);
        u[0] = theta.squaredNorm() / (2.0 * m);
        return u;
    };
    auto deriv = [](const Characteristics&, const Price&) -> Matrix { return Matrix::Zero(1, 1); };
    return StructureFunction(3, 1, eval, deriv, StructureKind::Custom);
}

GasFixture gas_cgf_fixture(const GasSpec& spec, double radius, int points_per_axis)
{
    validate_gas(spec);
    const double needed = 8.0 * std::sqrt(spec.m / spec.beta);
    if (radius < needed) {
        raise(ErrorCode::TruncationTooTight,
              "box radius " + std::to_string(radius) + " below 8 sqrt(m/beta) = " + std::to_string(needed));
    }
    const EconomyModel model(kinetic_energy_structure(spec.m), boxed_gas_micro(radius, points_per_axis), spec.n);
    GasFixture fx;
    fx.cgf = cgf(model, Vector::Constant(1, -spec.beta), Price::scalar(0.5));
    fx.log_box_volume = 3.0 * std::log(2.0 * radius);
    fx.log_lambda = fx.cgf.log_lambda + fx.log_box_volume;
    fx.energy = fx.cgf.grad[0];
    fx.entropy = static_cast<double>(spec.n) * (fx.log_lambda + spec.beta * fx.energy);
    return fx;
}

}  // namespace stochecon
