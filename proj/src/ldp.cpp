#include "stochecon/ldp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochecon/equilibrium.hpp"
#include "stochecon/simplex_lp.hpp"

namespace stochecon {

namespace {

constexpr int kMaxNewtonIterations = 200;
constexpr int kMaxHalvings = 60;
constexpr double kArmijo = 1e-4;
constexpr double kSingularRatio = 1e-13;
constexpr double kAlphaBlowup = 1e8;
constexpr double kCollapsedCurvature = 1e-8;

double min_eigenvalue(const Matrix& h)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

bool nearly_singular(const Matrix& h)
{
    if (h.rows() == 0) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    return !(lo > kSingularRatio * std::max(1.0, hi));
}

Vector log_weights(const std::vector<double>& q)
{
    Vector lq(static_cast<Eigen::Index>(q.size()));
    for (std::size_t k = 0; k < q.size(); ++k) {
        lq[static_cast<Eigen::Index>(k)] = q[k] > 0.0 ? std::log(q[k]) : -std::numeric_limits<double>::infinity();
    }
    return lq;
}

[[noreturn]] void fail_conjugate(const SupportTable& table, ErrorCode fallback, const std::string& what)
{
    if (!check_pep(table.z).possible) {
        raise(ErrorCode::NotPossibleEquilibriumPrice, "0 is not interior to the convex hull of the excess-demand support");
    }
    raise(fallback, what);
}

}  // namespace

SupportTable support_table(const EconomyModel& model, const Price& p)
{
    if (p.dim() != model.l()) {
        raise(ErrorCode::DimensionMismatch, "price dimension differs from model l");
    }
    if (!p.interior()) {
        raise(ErrorCode::InvalidArgument, "price must be interior");
    }
    return SupportTable{excess_table(model, p), log_weights(model.micro().support_weights())};
}

SupportTable stacked_table(const EconomyModel& model, const MacroStructure& x, const Price& p, const Vector& x_shift)
{
    if (x_shift.size() != x.d) {
        raise(ErrorCode::DimensionMismatch, "macro target has wrong dimension");
    }
    SupportTable base = support_table(model, p);
    const auto& pts = model.micro().support_points();
    const int l = model.l();
    Matrix z(base.z.rows(), l + x.d);
    z.leftCols(l) = base.z;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vector xv = x.eval(pts[k], p);
        if (xv.size() != x.d) {
            raise(ErrorCode::DimensionMismatch, "macro structure returned wrong dimension");
        }
        z.row(static_cast<Eigen::Index>(k)).tail(x.d) = (xv - x_shift).transpose();
    }
    return SupportTable{std::move(z), std::move(base.log_q)};
}

Vector tilted_weights(const SupportTable& table, const Vector& alpha)
{
    if (table.z.rows() == 0) {
        raise(ErrorCode::EmptySupport, "empty support");
    }
    if (alpha.size() != table.z.cols()) {
        raise(ErrorCode::DimensionMismatch, "alpha has wrong dimension");
    }
    Vector s = table.log_q + table.z * alpha;
    const double top = s.maxCoeff();
    if (!std::isfinite(top)) {
        raise(ErrorCode::EmptySupport, "support carries no probability");
    }
    s = (s.array() - top).exp();
    return s / s.sum();
}

CGFValue cgf(const SupportTable& table, const Vector& alpha)
{
    if (table.z.rows() == 0) {
        raise(ErrorCode::EmptySupport, "empty support");
    }
    if (alpha.size() != table.z.cols()) {
        raise(ErrorCode::DimensionMismatch, "alpha has wrong dimension");
    }
    const Vector s = table.log_q + table.z * alpha;
    const double top = s.maxCoeff();
    if (!std::isfinite(top)) {
        raise(ErrorCode::EmptySupport, "support carries no probability");
    }
    const Vector e = (s.array() - top).exp();
    const double sum = e.sum();
    const Vector w = e / sum;

    CGFValue out;
    out.log_lambda = top + std::log(sum);
    out.grad = table.z.transpose() * w;
    const Matrix centered = table.z.rowwise() - out.grad.transpose();
    out.hess = centered.transpose() * w.asDiagonal() * centered;
    out.hess = 0.5 * (out.hess + out.hess.transpose());
    return out;
}

CGFValue cgf(const EconomyModel& model, const Vector& alpha, const Price& p)
{
    return cgf(support_table(model, p), alpha);
}

ConjugateSolution solve_conjugate(const SupportTable& table)
{
    const auto l = table.z.cols();
    ConjugateSolution sol;
    sol.alpha = Vector::Zero(l);
    CGFValue cur = cgf(table, sol.alpha);
    if (nearly_singular(cur.hess)) {
        raise(ErrorCode::SingularHessian, "excess demand is degenerate under the prior");
    }
    const double prior_curvature = min_eigenvalue(cur.hess);

    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        sol.grad_norm = cur.grad.lpNorm<Eigen::Infinity>();
        if (sol.grad_norm < kConjugateTolerance) {
            break;
        }
        if (nearly_singular(cur.hess)) {
            fail_conjugate(table, ErrorCode::ConvergenceFailure, "tilted covariance collapsed before convergence");
        }
        const Vector step = -cur.hess.ldlt().solve(cur.grad);
        const double slope = cur.grad.dot(step);
        double t = 1.0;
        bool accepted = false;
        CGFValue trial;
        for (int h = 0; h <= kMaxHalvings; ++h) {
            trial = cgf(table, sol.alpha + t * step);
            if (!std::isfinite(trial.log_lambda)) {
                t *= 0.5;
                continue;
            }
            // Near the optimum the decrease drops below rounding; fall back
            // to progress in the gradient norm.
            const bool armijo =
                trial.log_lambda <= cur.log_lambda + kArmijo * t * slope + 1e-15 * std::abs(cur.log_lambda);
            const bool grad_progress = trial.grad.lpNorm<Eigen::Infinity>() <= (1.0 - kArmijo * t) * sol.grad_norm;
            if (armijo || grad_progress) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            break;
        }
        sol.alpha += t * step;
        cur = std::move(trial);
        sol.iterations = it + 1;
        if (sol.alpha.lpNorm<Eigen::Infinity>() > kAlphaBlowup) {
            break;
        }
    }

    sol.grad_norm = cur.grad.lpNorm<Eigen::Infinity>();
    if (!(sol.grad_norm < kConjugateTolerance)) {
        fail_conjugate(table, ErrorCode::ConvergenceFailure, "Newton iteration for the conjugate variable did not converge");
    }
    // A vanishing gradient with collapsed curvature means the infimum sits at
    // infinity (0 on the hull boundary), not at a finite conjugate.
    if (min_eigenvalue(cur.hess) < kCollapsedCurvature * prior_curvature && !check_pep(table.z).possible) {
        raise(ErrorCode::NotPossibleEquilibriumPrice, "0 lies on the boundary of the convex hull of the support");
    }
    sol.log_lambda_min = cur.log_lambda;
    sol.hess = cur.hess;
    return sol;
}

ConjugateSolution solve_conjugate(const EconomyModel& model, const Price& p)
{
    if (!model.micro().has_exact_expectation()) {
        raise(ErrorCode::NoExactExpectation, "conjugate variable needs atoms or a quadrature rule");
    }
    return solve_conjugate(support_table(model, p));
}

PepResult check_pep(const Matrix& z)
{
    if (z.rows() == 0) {
        raise(ErrorCode::EmptySupport, "empty support");
    }
    const auto l = z.cols();
    PepResult out;
    if (l == 1) {
        const double lo = z.col(0).minCoeff();
        const double hi = z.col(0).maxCoeff();
        out.possible = lo < 0.0 && hi > 0.0;
        if (!out.possible) {
            out.certificate = Vector::Constant(1, lo >= 0.0 ? -1.0 : 1.0);
        }
        return out;
    }

    Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double top = sv.size() ? sv[0] : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > 1e-10 * top) {
            ++rank;
        }
    }
    if (rank < l) {
        // Support lies in a hyperplane through 0: the normal separates.
        out.certificate = svd.matrixV().col(l - 1);
        return out;
    }

    const Matrix a = z.transpose();
    const Vector b = -a * Vector::Ones(z.rows());
    const auto lp_result = lp::phase_one(a, b);
    out.possible = lp_result.feasible;
    if (!out.possible) {
        Vector d = lp_result.farkas_y;
        const double norm = d.norm();
        out.certificate = norm > 0.0 ? Vector(d / norm) : d;
    }
    return out;
}

PepResult check_pep(const EconomyModel& model, const Price& p)
{
    return check_pep(support_table(model, p).z);
}

EntropyReport entropy(const EconomyModel& model, const Price& p)
{
    const auto sol = solve_conjugate(model, p);
    EntropyReport rep{p, model.n()};
    rep.per_agent_rate = -sol.log_lambda_min;
    rep.I = static_cast<double>(model.n()) * rep.per_agent_rate;
    rep.alpha = sol.alpha;
    rep.log_lambda = sol.log_lambda_min;
    return rep;
}

CGFValue bivariate_cgf(const EconomyModel& model, const Vector& alpha, const Vector& beta, const Price& p,
                       const MacroStructure& x)
{
    if (beta.size() != x.d) {
        raise(ErrorCode::DimensionMismatch, "beta has wrong dimension");
    }
    Vector ab(alpha.size() + beta.size());
    ab << alpha, beta;
    return cgf(stacked_table(model, x, p, Vector::Zero(x.d)), ab);
}

BivariateConjugate solve_bivariate_conjugate(const EconomyModel& model, const Price& p, const MacroStructure& x,
                                             const Vector& target_x)
{
    // Minimizing log lambda(alpha, beta) - beta.x is the plain conjugate
    // problem on the support shifted by (0, x).
    const SupportTable table = stacked_table(model, x, p, target_x);
    if (!check_pep(table.z).possible) {
        raise(ErrorCode::NotPossibleCompositeEquilibrium, "(p, x) is not a possible composite equilibrium");
    }
    const auto sol = solve_conjugate(table);
    const int l = model.l();
    BivariateConjugate out;
    out.alpha = sol.alpha.head(l);
    out.beta = sol.alpha.tail(x.d);
    out.log_lambda = sol.log_lambda_min + out.beta.dot(target_x);
    out.target_x = target_x;
    out.grad_norm = sol.grad_norm;
    return out;
}

EntropyReport bivariate_entropy(const EconomyModel& model, const Price& p, const MacroStructure& x,
                                const Vector& target_x)
{
    const auto sol = solve_bivariate_conjugate(model, p, x, target_x);
    EntropyReport rep{p, model.n()};
    rep.per_agent_rate = -sol.log_lambda + sol.beta.dot(target_x);
    rep.I = static_cast<double>(model.n()) * rep.per_agent_rate;
    rep.alpha = sol.alpha;
    rep.log_lambda = sol.log_lambda;
    rep.x = target_x;
    rep.beta = sol.beta;
    return rep;
}

Price minimize_entropy_over_price(const EconomyModel& model, const MacroStructure& x, const Vector& target_x,
                                  std::span<const double> grid)
{
    if (model.l() != 1) {
        raise(ErrorCode::InvalidArgument, "entropy minimization over price requires l = 1");
    }
    auto objective = [&](double t) {
        try {
            return bivariate_entropy(model, Price::scalar(t), x, target_x).per_agent_rate;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::size_t best = grid.size();
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0)) {
            raise(ErrorCode::InvalidArgument, "grid prices must be interior");
        }
        values[i] = objective(grid[i]);
        if (values[i] < best_value) {
            best_value = values[i];
            best = i;
        }
    }
    if (best == grid.size()) {
        raise(ErrorCode::AllInfeasible, "no grid price is a possible composite equilibrium");
    }

    double lo = best > 0 ? grid[best - 1] : grid[best];
    double hi = best + 1 < grid.size() ? grid[best + 1] : grid[best];
    if (lo > hi) {
        std::swap(lo, hi);
    }
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - ratio * (hi - lo);
    double d = lo + ratio * (hi - lo);
    double fc = objective(c);
    double fd = objective(d);
    while (hi - lo > 1e-6) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = objective(d);
        }
    }
    const double refined = 0.5 * (lo + hi);
    if (objective(refined) <= best_value) {
        return Price::scalar(refined);
    }
    return Price::scalar(grid[best]);
}

Corollary4Report corollary4_diagnostic(const EconomyModel& model, double radius)
{
    if (model.l() != 1 || model.structure().kind() != StructureKind::CobbDouglas || !model.micro().is_discrete()) {
        raise(ErrorCode::InvalidArgument, "diagnostic applies to discrete Cobb-Douglas models with l = 1");
    }
    const auto& atoms = model.micro().as_discrete().atoms;
    Corollary4Report rep;
    rep.e2_min = std::numeric_limits<double>::infinity();
    rep.e2_max = -std::numeric_limits<double>::infinity();
    rep.a1_min = std::numeric_limits<double>::infinity();
    for (const auto& theta : atoms) {
        const auto cd = cd_view(theta, 1);
        rep.e2_min = std::min(rep.e2_min, cd.endowment[1]);
        rep.e2_max = std::max(rep.e2_max, cd.endowment[1]);
        rep.a1_min = std::min(rep.a1_min, cd.shares[0]);
    }
    rep.e2_bounded_away = rep.e2_min > 0.0;
    rep.a1_bounded_away = rep.a1_min > 0.0;
    if (rep.e2_bounded_away && rep.a1_bounded_away) {
        rep.delta = rep.a1_min * rep.e2_min / rep.e2_max;
    }

    rep.radius = radius;
    rep.nearest_balanced_distance = std::numeric_limits<double>::infinity();
    try {
        const Price pe = expected_equilibrium(model);
        for (const auto& theta : atoms) {
            const auto cd = cd_view(theta, 1);
            const double dist = std::max((cd.shares - pe.coords()).lpNorm<Eigen::Infinity>(),
                                         (cd.endowment.array() - 1.0).abs().maxCoeff());
            rep.nearest_balanced_distance = std::min(rep.nearest_balanced_distance, dist);
        }
    } catch (const Error&) {
        // No expected equilibrium (e.g. zero endowment column): surrogate not evaluable.
    }
    rep.balanced_atom_within_radius = rep.nearest_balanced_distance <= radius;
    return rep;
}

FullRankReport full_rank_diagnostic(const EconomyModel& model, const Price& p)
{
    const auto& pts = model.micro().support_points();
    const auto& s = model.structure();
    FullRankReport rep;
    rep.z_norm = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double norm = s.eval(pts[k], p).lpNorm<Eigen::Infinity>();
        if (norm < rep.z_norm) {
            rep.z_norm = norm;
            rep.atom = k;
        }
    }

    const Characteristics& theta = pts[rep.atom];
    Matrix jac(s.l(), s.m());
    for (int i = 0; i < s.m(); ++i) {
        const double h = kDerivRelativeStep * std::max(1.0, std::abs(theta[i]));
        Characteristics up = theta;
        Characteristics dn = theta;
        up[i] += h;
        dn[i] -= h;
        jac.col(i) = (s.eval(up, p) - s.eval(dn, p)) / (2.0 * h);
    }
    Eigen::JacobiSVD<Matrix> svd(jac);
    rep.singular_values = svd.singularValues();
    const double top = rep.singular_values.size() ? rep.singular_values[0] : 0.0;
    for (Eigen::Index i = 0; i < rep.singular_values.size(); ++i) {
        if (top > 0.0 && rep.singular_values[i] > 1e-10 * top) {
            ++rep.rank;
        }
    }
    rep.smallest_singular_value = rep.singular_values.size() ? rep.singular_values.tail(1)[0] : 0.0;
    return rep;
}

}  // namespace stochecon
