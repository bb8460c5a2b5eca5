#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "stochecon/equilibrium.hpp"
#include "stochecon/ldp.hpp"

using namespace stochecon;
using fixtures::cd;

namespace {

const double kAlphaTwoMinusOne = -std::log(2.0) / 3.0;
// 0.5 * 2^{-2/3} + 0.5 * 2^{1/3}
const double kLambdaTwoMinusOne = 0.944940787421154873575;

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

SupportTable table_of(const std::vector<std::vector<double>>& rows, const std::vector<double>& q)
{
    const auto l = static_cast<Eigen::Index>(rows.front().size());
    SupportTable t{Matrix(static_cast<Eigen::Index>(rows.size()), l), Vector(static_cast<Eigen::Index>(q.size()))};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (Eigen::Index j = 0; j < l; ++j) {
            t.z(static_cast<Eigen::Index>(k), j) = rows[k][static_cast<std::size_t>(j)];
        }
        t.log_q[static_cast<Eigen::Index>(k)] = std::log(q[k]);
    }
    return t;
}

// Four classes: poor (wealth 0.4) and rich (wealth 1) agents, each with shares
// 0.3 or 0.7. Non-survival at w = 0.5 is independent of the share draw.
EconomyModel bernoulli_model(std::int64_t n)
{
    return EconomyModel(make_cd_structure(1),
                        MicroDistribution::discrete({cd(0.3, 0.4, 0.4), cd(0.7, 0.4, 0.4), cd(0.3, 1, 1), cd(0.7, 1, 1)},
                                                    {0.15, 0.15, 0.35, 0.35}),
                        n);
}

SupportTable random_table(std::mt19937_64& gen, int k, int l, double shift)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    SupportTable t{Matrix(k, l), Vector(k)};
    double total = 0.0;
    std::vector<double> q(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < l; ++j) {
            t.z(i, j) = u(gen) + shift;
        }
        q[static_cast<std::size_t>(i)] = w(gen);
        total += q[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < k; ++i) {
        t.log_q[i] = std::log(q[static_cast<std::size_t>(i)] / total);
    }
    return t;
}

}  // namespace

TEST_CASE("cgf at zero is the plain mean")
{
    const auto model = fixtures::two_atom(10);
    const auto p = Price::scalar(0.42);
    const auto v = cgf(model, Vector::Zero(1), p);
    CHECK(v.log_lambda == doctest::Approx(0.0).epsilon(1e-15));
    // E z = 0.5 (0.3 + 0.7) / 0.42 - 1
    CHECK(v.grad[0] == doctest::Approx(0.5 / 0.42 - 1.0).epsilon(1e-14));

    const auto pm = cgf(table_of({{1.0}, {-1.0}}, {0.5, 0.5}), Vector::Zero(1));
    CHECK(pm.grad[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(pm.hess(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const auto tm = cgf(table_of({{2.0}, {-1.0}}, {0.5, 0.5}), Vector::Constant(1, kAlphaTwoMinusOne));
    CHECK(std::abs(tm.grad[0]) < 1e-14);
    CHECK(tm.log_lambda == doctest::Approx(std::log(kLambdaTwoMinusOne)).epsilon(1e-14));
}

TEST_CASE("cgf stays finite where the plain transform overflows")
{
    const auto v = cgf(table_of({{800.0}, {-1.0}}, {0.5, 0.5}), Vector::Constant(1, 1.0));
    CHECK(std::isfinite(v.log_lambda));
    CHECK(v.log_lambda == doctest::Approx(800.0 + std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("conjugate variable: closed forms and failures")
{
    const auto model = fixtures::two_atom(10);
    const auto at_pe = solve_conjugate(model, expected_equilibrium(model));
    CHECK(std::abs(at_pe.alpha[0]) < 1e-10);
    CHECK(std::abs(at_pe.log_lambda_min) < 1e-14);

    const auto s = solve_conjugate(table_of({{2.0}, {-1.0}}, {0.5, 0.5}));
    CHECK(s.alpha[0] == doctest::Approx(kAlphaTwoMinusOne).epsilon(1e-10));
    CHECK(std::exp(s.log_lambda_min) == doctest::Approx(kLambdaTwoMinusOne).epsilon(1e-12));
    CHECK(s.grad_norm < kConjugateTolerance);

    CHECK(code_of([] { solve_conjugate(table_of({{1.0}, {2.0}}, {0.5, 0.5})); }) ==
          ErrorCode::NotPossibleEquilibriumPrice);
    CHECK(code_of([] { solve_conjugate(table_of({{0.0}, {1.0}}, {0.5, 0.5})); }) ==
          ErrorCode::NotPossibleEquilibriumPrice);
    CHECK(code_of([] { solve_conjugate(table_of({{0.5}}, {1.0})); }) == ErrorCode::SingularHessian);

    // Two-atom reference economy at p^1 = 0.5625: tilted weight on the 0.3 atom
    // is t = (0.7 - p) / 0.4, rate KL(t || 1/2), alpha = log((1-t)/t) / (z2 - z1).
    const auto shifted = solve_conjugate(model, Price::scalar(0.5625));
    CHECK(-shifted.log_lambda_min == doctest::Approx(0.0496556275406549783).epsilon(1e-12));
    CHECK(shifted.alpha[0] == doctest::Approx(0.909319450675855011).epsilon(1e-10));
}

TEST_CASE("possible equilibrium prices")
{
    CHECK(check_pep(table_of({{-1.0}, {2.0}}, {0.5, 0.5}).z).possible);
    const auto no = check_pep(table_of({{1.0}, {2.0}}, {0.5, 0.5}).z);
    CHECK_FALSE(no.possible);
    REQUIRE(no.certificate);
    CHECK((*no.certificate)[0] == -1.0);
    const auto model = fixtures::two_atom(10);
    CHECK(check_pep(model, expected_equilibrium(model)).possible);
    CHECK_FALSE(check_pep(model, Price::scalar(0.25)).possible);

    // l = 2: a triangle around the origin, one beside it, and a degenerate segment.
    CHECK(check_pep(table_of({{1, 0}, {-1, 1}, {-1, -1}}, {0.3, 0.3, 0.4}).z).possible);
    const auto outside = table_of({{1, 0.2}, {2, 1}, {1.5, -1}}, {0.3, 0.3, 0.4}).z;
    const auto res = check_pep(outside);
    CHECK_FALSE(res.possible);
    REQUIRE(res.certificate);
    CHECK((outside * *res.certificate).maxCoeff() <= 1e-12);
    // Origin on an edge is not interior.
    CHECK_FALSE(check_pep(table_of({{1, 0}, {-1, 0}, {0, 1}}, {0.3, 0.3, 0.4}).z).possible);
    CHECK_FALSE(check_pep(table_of({{1, 1}, {-1, -1}}, {0.5, 0.5}).z).possible);
}

TEST_CASE("entropy is extensive and vanishes at the expected equilibrium")
{
    const auto t100 = fixtures::tabulated({{2.0}, {-1.0}}, {0.5, 0.5}, 100);
    const auto e100 = entropy(t100, Price::scalar(0.5));
    CHECK(e100.I == doctest::Approx(5.66330122651324909668).epsilon(1e-10));
    CHECK(entropy(t100.with_n(200), Price::scalar(0.5)).I == doctest::Approx(11.3266024530264981934).epsilon(1e-10));
    CHECK(e100.I == doctest::Approx(100.0 * e100.per_agent_rate));

    const auto model = fixtures::two_atom(100);
    CHECK(std::abs(entropy(model, expected_equilibrium(model)).I) < 1e-12);
}

TEST_CASE("bivariate cgf reduces to the univariate one")
{
    const auto model = bernoulli_model(10);
    const auto x = fixtures::non_survival(0.5);
    const auto p = Price::scalar(0.47);
    for (double a : {-1.3, 0.0, 0.4}) {
        const auto uni = cgf(model, Vector::Constant(1, a), p);
        const auto bi = bivariate_cgf(model, Vector::Constant(1, a), Vector::Zero(1), p, x);
        CHECK(bi.log_lambda == uni.log_lambda);
        CHECK(bi.grad[0] == uni.grad[0]);
        CHECK(bi.hess(0, 0) == uni.hess(0, 0));
    }
    const auto zero = bivariate_cgf(model, Vector::Zero(1), Vector::Zero(1), p, x);
    CHECK(zero.grad[1] == doctest::Approx(0.3).epsilon(1e-14));
    const auto bern = bivariate_cgf(model, Vector::Zero(1), Vector::Ones(1), p, x);
    CHECK(bern.log_lambda == doctest::Approx(std::log(0.7 + 0.3 * std::exp(1.0))).epsilon(1e-14));
}

TEST_CASE("bivariate conjugate and entropy")
{
    const auto model = bernoulli_model(100);
    const auto x = fixtures::non_survival(0.5);
    const auto pe = expected_equilibrium(model);
    CHECK(pe[0] == doctest::Approx(0.5).epsilon(1e-14));

    const auto base = solve_bivariate_conjugate(model, pe, x, Vector::Constant(1, 0.3));
    CHECK(base.alpha.norm() < 1e-10);
    CHECK(base.beta.norm() < 1e-10);
    CHECK(std::abs(bivariate_entropy(model, pe, x, Vector::Constant(1, 0.3)).I) < 1e-8);

    const auto sol = solve_bivariate_conjugate(model, pe, x, Vector::Constant(1, 0.5));
    Vector ab(2);
    ab << sol.alpha, sol.beta;
    const auto at = bivariate_cgf(model, sol.alpha, sol.beta, pe, x);
    CHECK(std::abs(at.grad[0]) < 1e-10);
    CHECK(std::abs(at.grad[1] - 0.5) < 1e-10);
    CHECK(at.log_lambda == doctest::Approx(sol.log_lambda).epsilon(1e-13));

    // Shares stay balanced inside each wealth class, so alpha = 0 and the
    // rate is the Bernoulli relative entropy KL(0.5 || 0.3).
    const auto rep = bivariate_entropy(model, pe, x, Vector::Constant(1, 0.5));
    CHECK(rep.I / 100.0 == doctest::Approx(0.0871766935723888763505).epsilon(1e-10));
    CHECK(std::abs(rep.alpha[0]) < 1e-10);
    const double recomputed = 100.0 * (-rep.log_lambda + (*rep.beta)[0] * 0.5);
    CHECK(std::abs(recomputed - rep.I) < 1e-10);

    CHECK(code_of([&] { solve_bivariate_conjugate(model, pe, x, Vector::Constant(1, 1.2)); }) ==
          ErrorCode::NotPossibleCompositeEquilibrium);

    double prev = -1.0;
    for (double target : {0.3, 0.35, 0.4, 0.5, 0.6, 0.7}) {
        const double I = bivariate_entropy(model, pe, x, Vector::Constant(1, target)).I;
        CHECK(I > prev - 1e-12);
        prev = I;
    }
    prev = -1.0;
    for (double target : {0.3, 0.25, 0.2, 0.1, 0.05}) {
        const double I = bivariate_entropy(model, pe, x, Vector::Constant(1, target)).I;
        CHECK(I > prev - 1e-12);
        prev = I;
    }
}

TEST_CASE("entropy-minimizing price for a macro observation")
{
    const auto model = fixtures::survival_model(50);
    const auto x = fixtures::non_survival(0.5);
    const auto pe = expected_equilibrium(model);
    std::vector<double> grid;
    for (int i = 1; i < 40; ++i) {
        grid.push_back(i / 40.0);
    }
    const auto at_mean = minimize_entropy_over_price(model, x, Vector::Constant(1, 0.3), grid);
    CHECK(std::abs(at_mean[0] - pe[0]) < 1e-5);

    const Vector shifted = Vector::Constant(1, 0.36);
    const auto best = minimize_entropy_over_price(model, x, shifted, grid);
    const double I_best = bivariate_entropy(model, best, x, shifted).I;
    CHECK(I_best <= bivariate_entropy(model, pe, x, shifted).I + 1e-12);
    for (double g : grid) {
        double I = std::numeric_limits<double>::infinity();
        try {
            I = bivariate_entropy(model, Price::scalar(g), x, shifted).I;
        } catch (const Error&) {
        }
        CHECK(I_best <= I + 1e-12);
    }

    CHECK(code_of([&] { minimize_entropy_over_price(model, x, Vector::Constant(1, 1.2), grid); }) ==
          ErrorCode::AllInfeasible);
}

TEST_CASE("Corollary 4 diagnostic")
{
    const EconomyModel m(make_cd_structure(1),
                         MicroDistribution::discrete({cd(0.3, 1, 1), cd(0.5, 1, 2), cd(0.3, 2, 2)}, {0.3, 0.3, 0.4}), 5);
    const auto rep = corollary4_diagnostic(m);
    CHECK(rep.delta == doctest::Approx(0.15));
    CHECK(rep.e2_bounded_away);

    const EconomyModel zero(make_cd_structure(1),
                            MicroDistribution::discrete({cd(0.3, 1, 0), cd(0.5, 1, 2)}, {0.5, 0.5}), 5);
    const auto rz = corollary4_diagnostic(zero);
    CHECK_FALSE(rz.e2_bounded_away);
    CHECK(rz.delta == 0.0);

    const EconomyModel sym(make_cd_structure(1), MicroDistribution::discrete({cd(0.5, 1, 1)}, {1.0}), 5);
    const auto rs = corollary4_diagnostic(sym);
    CHECK(rs.delta == doctest::Approx(0.5));
    CHECK(rs.balanced_atom_within_radius);
}

TEST_CASE("full-rank diagnostic")
{
    const auto p = Price::scalar(0.4);
    const EconomyModel balanced(make_cd_structure(1), MicroDistribution::discrete({cd(0.4, 1, 1), cd(0.8, 1, 1)}, {0.5, 0.5}),
                                3);
    const auto rep = full_rank_diagnostic(balanced, p);
    CHECK(rep.atom == 0);
    CHECK(rep.z_norm < 1e-15);
    CHECK(rep.rank == 1);

    const StructureFunction flat(1, 1, [](const Characteristics&, const Price&) { return Vector::Constant(1, 0.7); });
    const EconomyModel constant(flat, MicroDistribution::discrete({Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)},
                                                                  {0.5, 0.5}),
                                3);
    CHECK(full_rank_diagnostic(constant, p).rank == 0);

    const auto generic = full_rank_diagnostic(fixtures::tri_atom(3), Price::scalar(0.37));
    CHECK(generic.rank == 1);
    CHECK(generic.smallest_singular_value > 0.0);

    // l = 2 at theta(p) = (p, 1).
    const Price p2 = validate_price({0.2, 0.3, 0.5});
    Vector a(3), e = Vector::Ones(3);
    a << 0.2, 0.3, 0.5;
    const EconomyModel l2(make_cd_structure(2), MicroDistribution::discrete({make_cd_characteristics(a, e)}, {1.0}), 2);
    const auto r2 = full_rank_diagnostic(l2, p2);
    CHECK(r2.z_norm < 1e-14);
    CHECK(r2.rank == 2);
}

TEST_CASE("cgf is convex along random segments")
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> t01(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int l = 1 + trial % 3;
        const auto table = random_table(gen, 5, l, 0.0);
        Vector a1(l), a2(l);
        for (int j = 0; j < l; ++j) {
            a1[j] = u(gen);
            a2[j] = u(gen);
        }
        const double t = t01(gen);
        const double lhs = cgf(table, t * a1 + (1 - t) * a2).log_lambda;
        const double rhs = t * cgf(table, a1).log_lambda + (1 - t) * cgf(table, a2).log_lambda;
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("cgf gradient and Hessian match finite differences")
{
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> pr(0.2, 0.8);
    const auto cd2 = make_cd_structure(2);
    for (int trial = 0; trial < 100; ++trial) {
        const bool scalar = trial % 2 == 0;
        const auto model = scalar ? fixtures::tri_atom(5)
                                  : EconomyModel(cd2,
                                                 MicroDistribution::discrete(
                                                     {make_cd_characteristics(Vector::Constant(3, 1.0 / 3), Vector::Ones(3)),
                                                      make_cd_characteristics((Vector(3) << 0.5, 0.2, 0.3).finished(),
                                                                              (Vector(3) << 1.0, 2.0, 0.5).finished()),
                                                      make_cd_characteristics((Vector(3) << 0.1, 0.6, 0.3).finished(),
                                                                              (Vector(3) << 2.0, 0.5, 1.0).finished())},
                                                     {0.2, 0.5, 0.3}),
                                                 5);
        const int l = model.l();
        Vector pc(l + 1);
        for (int j = 0; j <= l; ++j) {
            pc[j] = pr(gen);
        }
        pc /= pc.sum();
        pc[l] = 1.0 - pc.head(l).sum();
        const Price p(pc);
        Vector alpha(l);
        for (int j = 0; j < l; ++j) {
            alpha[j] = u(gen);
        }
        const auto v = cgf(model, alpha, p);
        const double h = 1e-5;
        for (int j = 0; j < l; ++j) {
            Vector up = alpha, dn = alpha;
            up[j] += h;
            dn[j] -= h;
            const auto vu = cgf(model, up, p);
            const auto vd = cgf(model, dn, p);
            const double g_fd = (vu.log_lambda - vd.log_lambda) / (2 * h);
            CHECK(std::abs(g_fd - v.grad[j]) <= 1e-6 * std::max(1.0, std::abs(v.grad[j])));
            const Vector h_fd = (vu.grad - vd.grad) / (2 * h);
            CHECK((h_fd - v.hess.col(j)).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, v.hess.cwiseAbs().maxCoeff()));
        }
        CHECK((v.hess - v.hess.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("conjugate post-state on random discrete models")
{
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> share(0.1, 0.9);
    std::uniform_real_distribution<double> endow(0.2, 2.0);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Characteristics> atoms;
        std::vector<double> q;
        for (int k = 0; k < 4; ++k) {
            atoms.push_back(cd(share(gen), endow(gen), endow(gen)));
            q.push_back(w(gen));
        }
        double total = 0.0;
        for (double x : q) {
            total += x;
        }
        for (double& x : q) {
            x /= total;
        }
        q.back() = 1.0 - (q[0] + q[1] + q[2]);
        const EconomyModel model(make_cd_structure(1), MicroDistribution::discrete(atoms, q), 20);
        const auto pe = expected_equilibrium(model);
        const auto at_pe = solve_conjugate(model, pe);
        CHECK(std::abs(at_pe.alpha[0]) < 1e-10);
        CHECK(std::abs(entropy(model, pe).I) < 1e-10);

        for (double dp : {-0.05, 0.03, 0.08}) {
            const double t = pe[0] + dp;
            if (!(t > 0.0 && t < 1.0) || !check_pep(model, Price::scalar(t)).possible) {
                continue;
            }
            const auto sol = solve_conjugate(model, Price::scalar(t));
            CHECK(sol.log_lambda_min <= 1e-15);
            const auto v = cgf(model, sol.alpha, Price::scalar(t));
            CHECK(std::abs(v.grad[0]) < 1e-9);
        }
    }
}

TEST_CASE("check_pep agrees with conjugate solvability")
{
    std::mt19937_64 gen(31);
    int possible = 0, impossible = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const int l = 1 + trial % 2;
        const int k = 1 + static_cast<int>(gen() % 6);
        const double shift = (trial % 4 == 0) ? 0.9 : 0.0;
        const auto table = random_table(gen, k, l, shift);
        const bool pep = check_pep(table.z).possible;
        bool solved = true;
        try {
            solve_conjugate(table);
        } catch (const Error&) {
            solved = false;
        }
        CHECK(pep == solved);
        (pep ? possible : impossible)++;
    }
    CHECK(possible > 50);
    CHECK(impossible > 50);
}
