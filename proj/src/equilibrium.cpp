#include "stochecon/equilibrium.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <queue>

namespace stochecon {

namespace {

constexpr double kPowerTolerance = 1e-14;
constexpr int kPowerIterationCap = 100000;
constexpr double kPositiveEntry = 1e-14;
constexpr double kResidualPerAgent = 1e-8;

bool strongly_connected(const Matrix& a)
{
    const auto k = a.rows();
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(k), 0);
        std::queue<Eigen::Index> queue;
        queue.push(0);
        seen[0] = 1;
        Eigen::Index count = 1;
        while (!queue.empty()) {
            const auto i = queue.front();
            queue.pop();
            for (Eigen::Index j = 0; j < k; ++j) {
                const double entry = transpose ? a(j, i) : a(i, j);
                if (entry > kPositiveEntry && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    ++count;
                    queue.push(j);
                }
            }
        }
        return count == k;
    };
    return reaches_all(false) && reaches_all(true);
}

Vector weighted_excess(const StructureFunction& s, std::span<const Characteristics> agents,
                       std::span<const double> weights, const Price& p)
{
    Vector total = Vector::Zero(s.l());
    for (std::size_t k = 0; k < agents.size(); ++k) {
        if (weights[k] != 0.0) {
            total += weights[k] * s.eval(agents[k], p);
        }
    }
    return total;
}

double total_weight(std::span<const double> weights)
{
    double w = 0.0;
    for (double x : weights) {
        w += x;
    }
    return w;
}

void check_sizes(std::span<const Characteristics> agents, std::span<const double> weights)
{
    if (agents.size() != weights.size()) {
        raise(ErrorCode::DimensionMismatch, "agent and weight counts differ");
    }
    if (agents.empty()) {
        raise(ErrorCode::EmptySupport, "equilibrium of an empty economy");
    }
}

std::vector<double> unit_weights(std::size_t n)
{
    return std::vector<double>(n, 1.0);
}

}  // namespace

Vector stationary_left_eigenvector(const Matrix& a, bool& irreducible, std::vector<std::string>& warnings)
{
    const auto k = a.rows();
    irreducible = strongly_connected(a);

    Eigen::RowVectorXd w = Eigen::RowVectorXd::Constant(k, 1.0 / static_cast<double>(k));
    bool converged = false;
    for (int it = 0; it < kPowerIterationCap; ++it) {
        Eigen::RowVectorXd next = w * a;
        const double change = (next - w).lpNorm<1>();
        w = next / next.sum();
        if (change <= kPowerTolerance * w.lpNorm<1>()) {
            converged = true;
            break;
        }
    }
    if (converged) {
        return w.transpose();
    }

    warnings.emplace_back("power iteration stalled; using dense eigen-decomposition");
    Eigen::EigenSolver<Matrix> solver(a.transpose());
    if (solver.info() != Eigen::Success) {
        raise(ErrorCode::EigenvectorFailure, "eigen-decomposition of A failed");
    }
    Eigen::Index best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
        const double gap = std::abs(solver.eigenvalues()[i] - std::complex<double>(1.0, 0.0));
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    if (best_gap > 1e-8) {
        raise(ErrorCode::EigenvectorFailure, "A has no eigenvalue 1");
    }
    Vector v = solver.eigenvectors().col(best).real();
    v /= v.sum();
    if ((v.array() < -1e-10).any()) {
        raise(ErrorCode::EigenvectorFailure, "eigenvector for eigenvalue 1 has mixed signs");
    }
    return v.cwiseMax(0.0) / v.cwiseMax(0.0).sum();
}

EquilibriumResult cd_equilibrium(const Configuration& config, int l)
{
    const auto w = unit_weights(config.thetas.size());
    return cd_equilibrium_weighted(config.thetas, w, l);
}

EquilibriumResult cd_equilibrium_weighted(std::span<const Characteristics> agents, std::span<const double> weights,
                                          int l)
{
    check_sizes(agents, weights);
    const int dim = l + 1;
    Vector col_endowment = Vector::Zero(dim);
    Matrix moment = Matrix::Zero(dim, dim);  // moment(j, k) = sum_i w_i e_i^j a_i^k
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto cd = cd_view(agents[i], l);
        col_endowment += weights[i] * cd.endowment;
        moment.noalias() += weights[i] * cd.endowment * cd.shares.transpose();
    }
    for (int j = 0; j < dim; ++j) {
        if (!(col_endowment[j] > 0.0)) {
            raise(ErrorCode::ZeroEndowmentColumn, "total endowment of commodity " + std::to_string(j + 1) + " is zero");
        }
    }
    const Matrix a = col_endowment.cwiseInverse().asDiagonal() * moment;

    EquilibriumResult result{Price::scalar(0.5), Vector(), EquilibriumMethod::Eigenvector, true, {}};
    bool irreducible = true;
    const Vector w = stationary_left_eigenvector(a, irreducible, result.warnings);
    Vector p = w.cwiseQuotient(col_endowment);
    p /= p.sum();
    // Snap tiny rounding drift so the simplex check passes.
    p[dim - 1] = 1.0 - p.head(l).sum();
    result.price = Price(p.cwiseMax(0.0));
    result.unique = irreducible;
    if (!irreducible) {
        result.warnings.emplace_back("ReducibleMatrix: equilibrium may not be unique");
    }

    if (result.price.interior()) {
        result.residual = Vector::Zero(l);
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const auto cd = cd_view(agents[i], l);
            const double wealth = p.dot(cd.endowment);
            for (int j = 0; j < l; ++j) {
                result.residual[j] += weights[i] * (cd.shares[j] / p[j] * wealth - cd.endowment[j]);
            }
        }
        const double scale = std::max(1.0, total_weight(weights));
        if (result.residual.lpNorm<Eigen::Infinity>() >= kResidualPerAgent * scale) {
            raise(ErrorCode::EigenvectorFailure, "eigenvector price does not clear the market");
        }
    } else {
        result.residual = Vector::Constant(l, std::numeric_limits<double>::quiet_NaN());
        result.warnings.emplace_back("equilibrium price on the simplex boundary");
    }
    return result;
}

EquilibriumResult bisection_equilibrium(const Configuration& config, const StructureFunction& structure, double tol)
{
    const auto w = unit_weights(config.thetas.size());
    return bisection_equilibrium_weighted(config.thetas, w, structure, tol);
}

EquilibriumResult bisection_equilibrium_weighted(std::span<const Characteristics> agents,
                                                 std::span<const double> weights, const StructureFunction& structure,
                                                 double tol)
{
    check_sizes(agents, weights);
    if (structure.l() != 1) {
        raise(ErrorCode::InvalidArgument, "bisection requires l = 1");
    }
    auto f = [&](double t) { return weighted_excess(structure, agents, weights, Price::scalar(t))[0]; };
    const double abs_tol = tol * std::max(1.0, total_weight(weights));

    EquilibriumResult result{Price::scalar(0.5), Vector(), EquilibriumMethod::Bisection, true, {}};

    std::vector<double> grid{1e-12};
    for (int i = 1; i <= 16; ++i) {
        grid.push_back(i / 17.0);
    }
    grid.push_back(1.0 - 1e-12);

    for (int i = 1; i <= 16; ++i) {
        const Price p = Price::scalar(grid[static_cast<std::size_t>(i)]);
        double slope = 0.0;
        for (std::size_t k = 0; k < agents.size(); ++k) {
            slope += weights[k] * structure.deriv_p(agents[k], p)(0, 0);
        }
        if (slope > 0.0) {
            result.warnings.emplace_back("NotMonotone: excess demand increases somewhere on (0,1)");
            result.unique = false;
            break;
        }
    }

    double lo = 0.0;
    double hi = 0.0;
    double flo = 0.0;
    bool bracketed = false;
    double prev = f(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = f(grid[i]);
        if (prev == 0.0) {
            lo = hi = grid[i - 1];
            bracketed = true;
            break;
        }
        if ((prev > 0.0) != (cur > 0.0) || cur == 0.0) {
            lo = grid[i - 1];
            hi = grid[i];
            flo = prev;
            bracketed = true;
            break;
        }
        prev = cur;
    }
    if (!bracketed) {
        raise(ErrorCode::NoSignChange, "excess demand does not change sign on (0,1)");
    }

    double mid = lo;
    if (hi > lo) {
        for (;;) {
            mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if (std::abs(fm) < abs_tol || hi - lo < 1e-12) {
                break;
            }
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
    }
    result.price = Price::scalar(mid);
    result.residual = weighted_excess(structure, agents, weights, result.price);
    return result;
}

EquilibriumResult realized_equilibrium(const StructureFunction& structure, std::span<const Characteristics> agents,
                                       std::span<const double> weights)
{
    if (structure.kind() == StructureKind::CobbDouglas) {
        return cd_equilibrium_weighted(agents, weights, structure.l());
    }
    if (structure.l() == 1) {
        return bisection_equilibrium_weighted(agents, weights, structure);
    }
    raise(ErrorCode::NonCDModel, "no equilibrium solver for a non-Cobb-Douglas structure with l > 1");
}

Price expected_equilibrium(const EconomyModel& model)
{
    const auto& pts = model.micro().support_points();
    const auto& q = model.micro().support_weights();
    const auto& s = model.structure();
    if (s.kind() == StructureKind::CobbDouglas) {
        auto result = cd_equilibrium_weighted(pts, q, s.l());
        if (result.price.interior() && result.residual.lpNorm<Eigen::Infinity>() >= 1e-10) {
            raise(ErrorCode::EigenvectorFailure, "expected excess demand does not vanish at the eigenvector price");
        }
        return result.price;
    }
    if (s.l() == 1) {
        return bisection_equilibrium_weighted(pts, q, s, 1e-14).price;
    }
    raise(ErrorCode::NonCDModel, "expected equilibrium needs Cobb-Douglas moments or l = 1");
}

SurvivalSpec SurvivalSpec::constant(double level)
{
    if (level < 0.0) {
        raise(ErrorCode::InvalidArgument, "survival level must be nonnegative");
    }
    return SurvivalSpec{[level](const Price&) { return level; }};
}

bool is_non_surviving(const Characteristics& theta, const Price& p, const SurvivalSpec& spec)
{
    const auto cd = cd_view(theta, p.dim());
    return p.coords().dot(cd.endowment) < spec.w(p);
}

std::int64_t survival_count(const Configuration& config, const Price& p, const SurvivalSpec& spec)
{
    std::int64_t count = 0;
    for (const auto& theta : config.thetas) {
        count += is_non_surviving(theta, p, spec) ? 1 : 0;
    }
    return count;
}

}  // namespace stochecon
