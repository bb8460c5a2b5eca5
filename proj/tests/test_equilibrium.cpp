#include "doctest.h"

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "stochecon/equilibrium.hpp"

using namespace stochecon;
using fixtures::cd;

namespace {

Configuration random_config(std::mt19937_64& gen, int n, int l)
{
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Configuration c;
    for (int i = 0; i < n; ++i) {
        Vector a(l + 1), e(l + 1);
        for (int j = 0; j <= l; ++j) {
            a[j] = u(gen);
            e[j] = 2.0 * u(gen);
        }
        a /= a.sum();
        a[l] = 1.0 - a.head(l).sum();
        c.thetas.push_back(make_cd_characteristics(a, e));
    }
    return c;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("Cobb-Douglas eigenvector equilibria")
{
    for (int n : {1, 5, 40}) {
        Configuration c{std::vector<Characteristics>(static_cast<std::size_t>(n), cd(0.3, 1, 1))};
        const auto r = cd_equilibrium(c, 1);
        CHECK(r.price[0] == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(r.price[1] == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(r.unique);
        CHECK(r.method == EquilibriumMethod::Eigenvector);
    }
    const auto pair = cd_equilibrium(Configuration{{cd(0.5, 1, 0), cd(0.5, 0, 1)}}, 1);
    CHECK(pair.price[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(pair.unique);
    const auto single = cd_equilibrium(Configuration{{cd(0.5, 1, 1)}}, 1);
    CHECK(single.price[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("eigenvector path reports zero columns and reducibility")
{
    CHECK(code_of([] { cd_equilibrium(Configuration{{cd(0.5, 1, 0)}}, 1); }) == ErrorCode::ZeroEndowmentColumn);

    // Each agent wants only what it owns: A = I, every price clears the market.
    const auto r = cd_equilibrium(Configuration{{cd(1.0, 1, 0), cd(0.0, 0, 1)}}, 1);
    CHECK_FALSE(r.unique);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("periodic exchange economy clears at the symmetric price")
{
    // Agent 1 owns good 1 and wants good 2 and vice versa: A = [[0,1],[1,0]].
    const auto r = cd_equilibrium(Configuration{{cd(0.0, 1, 0), cd(1.0, 0, 1)}}, 1);
    CHECK(r.price[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.unique);
}

TEST_CASE("expected equilibrium from moment matrices")
{
    const EconomyModel one(make_cd_structure(1), MicroDistribution::discrete({cd(0.3, 1, 1)}, {1.0}), 10);
    CHECK(expected_equilibrium(one)[0] == doctest::Approx(0.3).epsilon(1e-14));
    const EconomyModel pair(make_cd_structure(1),
                            MicroDistribution::discrete({cd(0.5, 1, 0), cd(0.5, 0, 1)}, {0.5, 0.5}), 10);
    CHECK(expected_equilibrium(pair)[0] == doctest::Approx(0.5).epsilon(1e-14));
    const EconomyModel sym(make_cd_structure(1), MicroDistribution::discrete({cd(0.5, 1, 1)}, {1.0}), 10);
    CHECK(expected_equilibrium(sym)[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(expected_equilibrium(fixtures::two_atom(3))[0] == doctest::Approx(0.5).epsilon(1e-14));

    // Non-CD l = 1 goes through bisection on the mean: z = t0 p2/p1 - t1.
    const EconomyModel ratio(make_ratio_structure(),
                             MicroDistribution::discrete({Vector::Constant(2, 1.0), (Vector(2) << 3.0, 1.0).finished()},
                                                         {0.5, 0.5}),
                             4);
    // Mean: 2 p2/p1 - 1 = 0 -> p1 = 2/3.
    CHECK(expected_equilibrium(ratio)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("bisection path")
{
    const auto cd1 = make_cd_structure(1);
    const auto r = bisection_equilibrium(Configuration{{cd(0.5, 1, 0), cd(0.5, 0, 1)}}, cd1);
    CHECK(r.method == EquilibriumMethod::Bisection);
    CHECK(std::abs(r.price[0] - 0.5) < 1e-10);
    CHECK(std::abs(bisection_equilibrium(Configuration{{cd(0.5, 1, 1)}}, cd1).price[0] - 0.5) < 1e-10);

    // z = p2/p1 + 1 > 0 on (0,1).
    const Configuration up{{(Vector(2) << 1.0, -1.0).finished()}};
    CHECK(code_of([&] { bisection_equilibrium(up, make_ratio_structure()); }) == ErrorCode::NoSignChange);
}

TEST_CASE("eigenvector and bisection agree on random l = 1 economies")
{
    std::mt19937_64 gen(3);
    const auto cd1 = make_cd_structure(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto config = random_config(gen, 1 + trial % 30, 1);
        const auto eig = cd_equilibrium(config, 1);
        const auto bis = bisection_equilibrium(config, cd1);
        CHECK(std::abs(eig.price[0] - bis.price[0]) < 1e-8);
    }
}

TEST_CASE("equilibrium invariances and residuals")
{
    std::mt19937_64 gen(4);
    for (int l = 1; l <= 3; ++l) {
        for (int trial = 0; trial < 40; ++trial) {
            auto config = random_config(gen, 2 + trial % 17, l);
            const auto base = cd_equilibrium(config, l);
            const double n = static_cast<double>(config.thetas.size());
            CHECK(base.residual.cwiseAbs().maxCoeff() / n < 1e-8);

            Configuration scaled = config;
            for (auto& t : scaled.thetas) {
                t.tail(l + 1) *= 3.7;
            }
            CHECK(price_distance(cd_equilibrium(scaled, l).price, base.price) < 1e-12);

            std::shuffle(config.thetas.begin(), config.thetas.end(), gen);
            CHECK(price_distance(cd_equilibrium(config, l).price, base.price) < 1e-12);
        }
    }
}

TEST_CASE("survival counts use a strict inequality")
{
    const auto half = Price::scalar(0.5);
    const auto w = SurvivalSpec::constant(0.5);
    CHECK(survival_count(Configuration{{cd(0.5, 1, 0)}}, half, w) == 0);
    CHECK(survival_count(Configuration{{cd(0.5, 0.2, 0.2)}}, half, w) == 1);
    CHECK(survival_count(Configuration{{cd(0.5, 0.2, 0.2), cd(0.5, 0.5, 0.5), cd(0.5, 0.9, 0.9)}}, half, w) == 1);
}

TEST_CASE("dispatch refuses non-CD structures with l > 1")
{
    const StructureFunction custom(2, 2, [](const Characteristics& t, const Price&) { return Vector(t); });
    const std::vector<Characteristics> atoms{Vector::Constant(2, 1.0)};
    const std::vector<double> w{1.0};
    CHECK(code_of([&] { realized_equilibrium(custom, atoms, w); }) == ErrorCode::NonCDModel);
}
