#include "doctest.h"

#include <cmath>
#include <random>

#include "stochecon/thermo.hpp"

using namespace stochecon;

TEST_CASE("ideal gas closed forms")
{
    const GasSpec unit{1.0, 2, 1.0};
    CHECK(gas_partition(unit) == doctest::Approx(2.75681559961401822534).epsilon(1e-14));
    CHECK(gas_internal_energy(unit) == doctest::Approx(3.0).epsilon(1e-15));
    const auto s = gas_entropy(unit);
    CHECK(s.from_partition == doctest::Approx(8.51363119922803645068).epsilon(1e-14));
    CHECK(s.closed_form == doctest::Approx(8.51363119922803645068).epsilon(1e-14));

    const GasSpec other{2.0, 3, 0.5};
    CHECK(gas_partition(other) == doctest::Approx(4.83625714129385415359).epsilon(1e-14));
    CHECK(gas_internal_energy(other) == doctest::Approx(9.0).epsilon(1e-15));
    CHECK(gas_entropy(other).closed_form == doctest::Approx(19.0087714238815624608).epsilon(1e-14));

    CHECK(gas_canonical_pdf(Vector::Zero(3), GasSpec{}) == doctest::Approx(std::pow(2.0 * M_PI, -1.5)).epsilon(1e-15));
    CHECK_THROWS_AS(validate_gas(GasSpec{-1.0, 1, 1.0}), Error);
    CHECK_THROWS_AS(validate_gas(GasSpec{1.0, 0, 1.0}), Error);
    CHECK_THROWS_AS(validate_gas(GasSpec{1.0, 1, 0.0}), Error);
}

TEST_CASE("entropy forms agree and obey the thermodynamic identities")
{
    std::mt19937_64 gen(53);
    std::uniform_real_distribution<double> lm(-3.0, 3.0);
    std::uniform_int_distribution<std::int64_t> nn(1, 1000000);
    for (int trial = 0; trial < 1000; ++trial) {
        const GasSpec spec{std::exp(lm(gen)), nn(gen), std::exp(lm(gen))};
        const auto s = gas_entropy(spec);
        CHECK(std::abs(s.from_partition - s.closed_form) <= 1e-12 * std::max(1.0, std::abs(s.closed_form)));

        // E = -n d log lambda / d beta and dS/d beta = beta dE/d beta.
        const double h = 1e-5 * spec.beta;
        GasSpec up = spec, dn = spec;
        up.beta += h;
        dn.beta -= h;
        const double n = static_cast<double>(spec.n);
        const double dlog = (gas_partition(up) - gas_partition(dn)) / (2 * h);
        CHECK(std::abs(-n * dlog - gas_internal_energy(spec)) <= 1e-6 * gas_internal_energy(spec));
        const double dS = (gas_entropy(up).closed_form - gas_entropy(dn).closed_form) / (2 * h);
        const double dE = (gas_internal_energy(up) - gas_internal_energy(dn)) / (2 * h);
        CHECK(std::abs(dS - spec.beta * dE) <= 1e-6 * std::abs(spec.beta * dE));
    }
}

TEST_CASE("Maxwell-Boltzmann density integrates to one")
{
    const GasSpec spec{1.5, 1, 0.8};
    const double sigma = std::sqrt(spec.m / spec.beta);
    const double radius = 12.0 * sigma;
    const int k = 41;
    const double h = 2.0 * radius / (k - 1);
    double total = 0.0;
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            for (int c = 0; c < k; ++c) {
                const double w = (a == 0 || a == k - 1 ? 0.5 : 1.0) * (b == 0 || b == k - 1 ? 0.5 : 1.0) *
                                 (c == 0 || c == k - 1 ? 0.5 : 1.0);
                Vector t(3);
                t << -radius + a * h, -radius + b * h, -radius + c * h;
                total += w * gas_canonical_pdf(t, spec);
            }
        }
    }
    CHECK(std::abs(total * h * h * h - 1.0) < 1e-8);
}

TEST_CASE("generic engine reproduces the gas partition function")
{
    for (const GasSpec spec : {GasSpec{1.0, 2, 1.0}, GasSpec{2.0, 5, 0.5}, GasSpec{0.5, 1, 3.0}}) {
        const double sigma = std::sqrt(spec.m / spec.beta);
        const double radius = std::max(10.0, 8.0 * sigma);
        const int points = 2 * static_cast<int>(std::ceil(radius / (0.5 * sigma))) + 1;
        const auto fx = gas_cgf_fixture(spec, radius, points);
        CHECK(std::abs(fx.log_lambda - gas_partition(spec)) < 1e-4);
        CHECK(std::abs(fx.energy - 1.5 / spec.beta) < 1e-4);
        CHECK(std::abs(fx.entropy - gas_entropy(spec).closed_form) < 1e-4 * static_cast<double>(spec.n));
    }
}

TEST_CASE("gas box that truncates the density is refused")
{
    try {
        (void)gas_cgf_fixture(GasSpec{}, 2.0, 21);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TruncationTooTight);
    }
}
