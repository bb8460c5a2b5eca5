#pragma once

// Core domain types: simplex prices, agent characteristics, a-priori
// micro distributions, structure functions and economy models.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stochecon/error.hpp"
#include "stochecon/rng.hpp"

namespace stochecon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Point on the price simplex S^l: l+1 nonnegative coordinates summing to one.
class Price {
public:
    /// Validating constructor; throws NotOnSimplex.
    explicit Price(Vector coords);

    /// l, the number of free coordinates.
    int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
    const Vector& coords() const noexcept { return coords_; }
    double operator[](int j) const { return coords_[j]; }

    /// All coordinates strictly positive.
    bool interior() const noexcept;

    /// The first l coordinates.
    Vector head() const { return coords_.head(dim()); }

    /// Price with first coordinate t and second 1 - t (l = 1 convenience).
    static Price scalar(double t);

private:
    Vector coords_;
};

inline constexpr double kSimplexTolerance = 1e-12;

/// Checks simplex membership; throws NotOnSimplex.
Price validate_price(const Vector& coords);
Price validate_price(std::initializer_list<double> coords);

/// Sup-norm distance on the first l coordinates.
double price_distance(const Price& a, const Price& b);

/// Agent characteristics theta, stored flat. For Cobb-Douglas agents the
/// layout is (a^1..a^{l+1}, e^1..e^{l+1}).
using Characteristics = Vector;

struct CdView {
    Eigen::Map<const Vector> shares;
    Eigen::Map<const Vector> endowment;
};

CdView cd_view(const Characteristics& theta, int l);
Characteristics make_cd_characteristics(const Vector& shares, const Vector& endowment);

/// Finite-discrete a-priori law: atoms with strictly positive weights.
struct DiscreteMicro {
    std::vector<Characteristics> atoms;
    std::vector<double> weights;
};

using QuadratureRule = std::vector<std::pair<Characteristics, double>>;
using CharacteristicsSampler = std::function<Characteristics(rng::Stream&)>;

/// Sampler-based law, optionally with a quadrature rule for expectations
/// and an axis-aligned support box (needed for rejection sampling of tilts).
struct ContinuousMicro {
    int dim = 0;
    CharacteristicsSampler sampler;
    std::optional<QuadratureRule> quadrature;
    std::optional<std::pair<Vector, Vector>> support_box;
};

class MicroDistribution {
public:
    /// Validates weights (positive, sum to 1 within 1e-12) and distinct atoms.
    static MicroDistribution discrete(std::vector<Characteristics> atoms, std::vector<double> weights);
    /// Validates quadrature weights (sum to 1 within 1e-9) when present.
    static MicroDistribution continuous(ContinuousMicro spec);

    bool is_discrete() const noexcept { return std::holds_alternative<DiscreteMicro>(repr_); }
    const DiscreteMicro& as_discrete() const;
    const ContinuousMicro& as_continuous() const;

    /// Dimension m of the characteristics.
    int dim() const;

    /// True when expectations can be computed exactly (atoms or quadrature).
    bool has_exact_expectation() const noexcept;

    /// Atoms or quadrature nodes with their probabilities.
    /// Throws NoExactExpectation for pure-sampler laws.
    const std::vector<Characteristics>& support_points() const;
    const std::vector<double>& support_weights() const;

    /// Draws one characteristic from the a-priori law.
    Characteristics sample(rng::Stream& stream) const;

    /// Expectation of g via the exact support.
    double expectation(const std::function<double(const Characteristics&)>& g) const;

private:
    std::variant<DiscreteMicro, ContinuousMicro> repr_;
    // Quadrature nodes flattened for uniform access.
    std::vector<Characteristics> nodes_;
    std::vector<double> node_weights_;
    std::vector<double> cumulative_;
};

enum class StructureKind { CobbDouglas, Custom };

/// Deterministic individual excess demand z(theta; p) in R^l.
class StructureFunction {
public:
    using Eval = std::function<Vector(const Characteristics&, const Price&)>;
    using Deriv = std::function<Matrix(const Characteristics&, const Price&)>;

    StructureFunction(int m, int l, Eval eval, std::optional<Deriv> deriv = std::nullopt,
                      StructureKind kind = StructureKind::Custom);

    int m() const noexcept { return m_; }
    int l() const noexcept { return l_; }
    StructureKind kind() const noexcept { return kind_; }

    Vector eval(const Characteristics& theta, const Price& p) const;

    /// l x l Jacobian with respect to p^1..p^l (p^{l+1} held fixed).
    /// Analytic when provided, otherwise central differences with relative step 1e-6.
    Matrix deriv_p(const Characteristics& theta, const Price& p) const;

    bool has_analytic_deriv() const noexcept { return deriv_.has_value(); }

private:
    int m_;
    int l_;
    Eval eval_;
    std::optional<Deriv> deriv_;
    StructureKind kind_;
};

inline constexpr double kDerivRelativeStep = 1e-6;

/// Cobb-Douglas structure z^j = (a^j / p^j) p.e - e^j, j = 1..l.
StructureFunction make_cd_structure(int l);

/// The Cobb-Douglas formula on an arbitrary positive price vector (not
/// necessarily normalized).
Vector cd_excess_demand(const Characteristics& theta, const Vector& prices, int l);

/// Price-independent excess demand z(theta; p) = theta[0..l). Handy fixture for
/// exercising the large-deviation machinery with prescribed support values.
StructureFunction make_tabulated_structure(int l);

/// Ratio structure z(theta; p) = theta[0] p^2 / p^1 - theta[1] (l = 1), a
/// non-Cobb-Douglas reference solved by bisection.
StructureFunction make_ratio_structure();

/// Reconstructs the (l+1)-vector of excess demands via Walras' law.
Vector walras_complete(const Vector& z, const Price& p);

/// A macroeconomic per-agent variable x(theta; p) in R^d.
struct MacroStructure {
    int d = 1;
    std::function<Vector(const Characteristics&, const Price&)> eval;
};

class EconomyModel {
public:
    EconomyModel(StructureFunction structure, MicroDistribution micro, std::int64_t n);

    const StructureFunction& structure() const noexcept { return structure_; }
    const MicroDistribution& micro() const noexcept { return micro_; }
    std::int64_t n() const noexcept { return n_; }
    int l() const noexcept { return structure_.l(); }

    /// Same structure and micro law with a different agent count.
    EconomyModel with_n(std::int64_t n) const;

private:
    StructureFunction structure_;
    MicroDistribution micro_;
    std::int64_t n_;
};

/// One realized economy omega = (theta_1, ..., theta_n).
struct Configuration {
    std::vector<Characteristics> thetas;
};

/// Z(omega; p) = sum_i z(theta_i; p). Throws DimensionMismatch.
Vector total_excess_demand(const EconomyModel& model, const Configuration& config, const Price& p);

/// Matrix with one row z(theta_k; p) per support point of the model.
Matrix excess_table(const EconomyModel& model, const Price& p);

}  // namespace stochecon
