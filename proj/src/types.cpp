#include "stochecon/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace stochecon {

namespace {

std::string describe(const Vector& v)
{
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v[i];
    }
    os << ')';
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Price

Price::Price(Vector coords) : coords_(std::move(coords))
{
    if (coords_.size() < 2) {
        raise(ErrorCode::NotOnSimplex, "price needs at least two coordinates");
    }
    for (Eigen::Index j = 0; j < coords_.size(); ++j) {
        if (!std::isfinite(coords_[j]) || coords_[j] < 0.0) {
            raise(ErrorCode::NotOnSimplex, "negative or non-finite coordinate in " + describe(coords_));
        }
    }
    if (std::abs(coords_.sum() - 1.0) > kSimplexTolerance) {
        raise(ErrorCode::NotOnSimplex, "coordinates of " + describe(coords_) + " do not sum to 1");
    }
}

bool Price::interior() const noexcept
{
    return (coords_.array() > 0.0).all();
}

Price Price::scalar(double t)
{
    Vector c(2);
    c << t, 1.0 - t;
    return Price(std::move(c));
}

Price validate_price(const Vector& coords)
{
    return Price(coords);
}

Price validate_price(std::initializer_list<double> coords)
{
    Vector v(static_cast<Eigen::Index>(coords.size()));
    std::copy(coords.begin(), coords.end(), v.data());
    return Price(std::move(v));
}

double price_distance(const Price& a, const Price& b)
{
    if (a.dim() != b.dim()) {
        raise(ErrorCode::DimensionMismatch, "prices of different dimension");
    }
    return (a.head() - b.head()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Characteristics

CdView cd_view(const Characteristics& theta, int l)
{
    if (theta.size() != 2 * (l + 1)) {
        raise(ErrorCode::DimensionMismatch, "Cobb-Douglas characteristics need 2(l+1) entries");
    }
    return CdView{Eigen::Map<const Vector>(theta.data(), l + 1),
                  Eigen::Map<const Vector>(theta.data() + l + 1, l + 1)};
}

Characteristics make_cd_characteristics(const Vector& shares, const Vector& endowment)
{
    if (shares.size() != endowment.size() || shares.size() < 2) {
        raise(ErrorCode::DimensionMismatch, "shares and endowment must both have l+1 >= 2 entries");
    }
    if ((shares.array() < 0.0).any() || std::abs(shares.sum() - 1.0) > kSimplexTolerance) {
        raise(ErrorCode::InvalidArgument, "share vector must lie on the simplex");
    }
    if ((endowment.array() < 0.0).any()) {
        raise(ErrorCode::InvalidArgument, "endowments must be nonnegative");
    }
    Characteristics theta(shares.size() * 2);
    theta << shares, endowment;
    return theta;
}

// ---------------------------------------------------------------------------
// MicroDistribution

MicroDistribution MicroDistribution::discrete(std::vector<Characteristics> atoms, std::vector<double> weights)
{
    if (atoms.empty()) {
        raise(ErrorCode::EmptySupport, "discrete distribution without atoms");
    }
    if (atoms.size() != weights.size()) {
        raise(ErrorCode::DimensionMismatch, "atom and weight counts differ");
    }
    const auto m = atoms.front().size();
    double total = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (atoms[k].size() != m) {
            raise(ErrorCode::DimensionMismatch, "atoms of different dimension");
        }
        if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) {
            raise(ErrorCode::InvalidArgument, "atom weights must be strictly positive");
        }
        total += weights[k];
        for (std::size_t j = 0; j < k; ++j) {
            if (atoms[j] == atoms[k]) {
                raise(ErrorCode::InvalidArgument, "atoms must be pairwise distinct");
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-12) {
        raise(ErrorCode::InvalidArgument, "atom weights must sum to 1");
    }

    MicroDistribution micro;
    micro.nodes_ = atoms;
    micro.node_weights_ = weights;
    micro.repr_ = DiscreteMicro{std::move(atoms), std::move(weights)};
    micro.cumulative_.resize(micro.node_weights_.size());
    std::partial_sum(micro.node_weights_.begin(), micro.node_weights_.end(), micro.cumulative_.begin());
    return micro;
}

MicroDistribution MicroDistribution::continuous(ContinuousMicro spec)
{
    if (spec.dim <= 0) {
        raise(ErrorCode::InvalidArgument, "continuous distribution needs a positive dimension");
    }
    MicroDistribution micro;
    if (spec.quadrature) {
        if (spec.quadrature->empty()) {
            raise(ErrorCode::EmptySupport, "empty quadrature rule");
        }
        double total = 0.0;
        for (const auto& [node, w] : *spec.quadrature) {
            if (node.size() != spec.dim) {
                raise(ErrorCode::DimensionMismatch, "quadrature node of wrong dimension");
            }
            if (w < 0.0) {
                raise(ErrorCode::InvalidArgument, "negative quadrature weight");
            }
            total += w;
            micro.nodes_.push_back(node);
            micro.node_weights_.push_back(w);
        }
        if (std::abs(total - 1.0) > 1e-9) {
            raise(ErrorCode::InvalidArgument, "quadrature weights must sum to 1");
        }
    }
    if (spec.support_box) {
        const auto& [lo, hi] = *spec.support_box;
        if (lo.size() != spec.dim || hi.size() != spec.dim || (hi.array() < lo.array()).any()) {
            raise(ErrorCode::InvalidArgument, "malformed support box");
        }
    }
    micro.repr_ = std::move(spec);
    return micro;
}

const DiscreteMicro& MicroDistribution::as_discrete() const
{
    if (!is_discrete()) {
        raise(ErrorCode::InvalidArgument, "micro distribution is not discrete");
    }
    return std::get<DiscreteMicro>(repr_);
}

const ContinuousMicro& MicroDistribution::as_continuous() const
{
    if (is_discrete()) {
        raise(ErrorCode::InvalidArgument, "micro distribution is not continuous");
    }
    return std::get<ContinuousMicro>(repr_);
}

int MicroDistribution::dim() const
{
    if (is_discrete()) {
        return static_cast<int>(as_discrete().atoms.front().size());
    }
    return as_continuous().dim;
}

bool MicroDistribution::has_exact_expectation() const noexcept
{
    return !nodes_.empty();
}

const std::vector<Characteristics>& MicroDistribution::support_points() const
{
    if (nodes_.empty()) {
        raise(ErrorCode::NoExactExpectation, "sampler-only distribution has no exact support");
    }
    return nodes_;
}

const std::vector<double>& MicroDistribution::support_weights() const
{
    if (nodes_.empty()) {
        raise(ErrorCode::NoExactExpectation, "sampler-only distribution has no exact support");
    }
    return node_weights_;
}

Characteristics MicroDistribution::sample(rng::Stream& stream) const
{
    if (is_discrete()) {
        const double u = stream.uniform() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), nodes_.size() - 1);
        return nodes_[k];
    }
    const auto& spec = as_continuous();
    if (!spec.sampler) {
        raise(ErrorCode::InvalidArgument, "continuous distribution without sampler");
    }
    return spec.sampler(stream);
}

double MicroDistribution::expectation(const std::function<double(const Characteristics&)>& g) const
{
    const auto& pts = support_points();
    const auto& w = support_weights();
    double acc = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        acc += w[k] * g(pts[k]);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// StructureFunction

StructureFunction::StructureFunction(int m, int l, Eval eval, std::optional<Deriv> deriv, StructureKind kind)
    : m_(m), l_(l), eval_(std::move(eval)), deriv_(std::move(deriv)), kind_(kind)
{
    if (m <= 0 || l <= 0) {
        raise(ErrorCode::InvalidArgument, "structure function dimensions must be positive");
    }
    if (!eval_) {
        raise(ErrorCode::InvalidArgument, "structure function without evaluator");
    }
}

Vector StructureFunction::eval(const Characteristics& theta, const Price& p) const
{
    if (theta.size() != m_ || p.dim() != l_) {
        raise(ErrorCode::DimensionMismatch, "structure function called with wrong dimensions");
    }
    return eval_(theta, p);
}

Matrix StructureFunction::deriv_p(const Characteristics& theta, const Price& p) const
{
    if (deriv_) {
        if (theta.size() != m_ || p.dim() != l_) {
            raise(ErrorCode::DimensionMismatch, "structure derivative called with wrong dimensions");
        }
        return (*deriv_)(theta, p);
    }
    // Central differences on the unnormalized price vector; eval sees a
    // renormalized simplex point, which is exact by degree-0 homogeneity.
    Matrix jac(l_, l_);
    const Vector& base = p.coords();
    for (int k = 0; k < l_; ++k) {
        const double h = kDerivRelativeStep * std::max(1.0, std::abs(base[k]));
        Vector up = base;
        Vector dn = base;
        up[k] += h;
        dn[k] -= h;
        const double su = up.sum();
        const double sd = dn.sum();
        const Vector zu = eval(theta, Price(up / su));
        const Vector zd = eval(theta, Price(dn / sd));
        jac.col(k) = (zu - zd) / (2.0 * h);
    }
    return jac;
}

Vector cd_excess_demand(const Characteristics& theta, const Vector& prices, int l)
{
    const auto cd = cd_view(theta, l);
    if (prices.size() != l + 1) {
        raise(ErrorCode::DimensionMismatch, "price vector needs l+1 entries");
    }
    const double wealth = prices.dot(cd.endowment);
    Vector z(l);
    for (int j = 0; j < l; ++j) {
        z[j] = cd.shares[j] / prices[j] * wealth - cd.endowment[j];
    }
    return z;
}

StructureFunction make_cd_structure(int l)
{
    if (l < 1) {
        raise(ErrorCode::InvalidArgument, "l must be at least 1");
    }
    auto eval = [l](const Characteristics& theta, const Price& p) { return cd_excess_demand(theta, p.coords(), l); };
    // dz^j/dp^k = (a^j/p^j) e^k - delta_jk a^j (p.e) / (p^j)^2, p^{l+1} fixed.
    auto deriv = [l](const Characteristics& theta, const Price& p) {
        const auto cd = cd_view(theta, l);
        const double wealth = p.coords().dot(cd.endowment);
        Matrix jac(l, l);
        for (int j = 0; j < l; ++j) {
            for (int k = 0; k < l; ++k) {
                jac(j, k) = cd.shares[j] / p[j] * cd.endowment[k];
            }
            jac(j, j) -= cd.shares[j] * wealth / (p[j] * p[j]);
        }
        return jac;
    };
    return StructureFunction(2 * (l + 1), l, eval, deriv, StructureKind::CobbDouglas);
}

StructureFunction make_tabulated_structure(int l)
{
    auto eval = [l](const Characteristics& theta, const Price&) -> Vector { return theta.head(l); };
    auto deriv = [l](const Characteristics&, const Price&) -> Matrix { return Matrix::Zero(l, l); };
    return StructureFunction(l, l, eval, deriv, StructureKind::Custom);
}

StructureFunction make_ratio_structure()
{
    auto eval = [](const Characteristics& theta, const Price& p) {
        Vector z(1);
        z[0] = theta[0] * p[1] / p[0] - theta[1];
        return z;
    };
    auto deriv = [](const Characteristics& theta, const Price& p) {
        Matrix jac(1, 1);
        jac(0, 0) = -theta[0] * p[1] / (p[0] * p[0]);
        return jac;
    };
    return StructureFunction(2, 1, eval, deriv, StructureKind::Custom);
}

Vector walras_complete(const Vector& z, const Price& p)
{
    const int l = p.dim();
    if (z.size() != l) {
        raise(ErrorCode::DimensionMismatch, "excess demand vector has wrong length");
    }
    if (!(p[l] > 0.0)) {
        raise(ErrorCode::InvalidArgument, "last price coordinate must be positive");
    }
    Vector full(l + 1);
    full.head(l) = z;
    full[l] = -p.head().dot(z) / p[l];
    return full;
}

// ---------------------------------------------------------------------------
// EconomyModel

EconomyModel::EconomyModel(StructureFunction structure, MicroDistribution micro, std::int64_t n)
    : structure_(std::move(structure)), micro_(std::move(micro)), n_(n)
{
    if (n_ < 1) {
        raise(ErrorCode::InvalidArgument, "agent count n must be at least 1");
    }
    if (micro_.dim() != structure_.m()) {
        raise(ErrorCode::DimensionMismatch, "micro distribution dimension differs from structure dimension m");
    }
}

EconomyModel EconomyModel::with_n(std::int64_t n) const
{
    return EconomyModel(structure_, micro_, n);
}

Vector total_excess_demand(const EconomyModel& model, const Configuration& config, const Price& p)
{
    const auto& s = model.structure();
    if (p.dim() != s.l()) {
        raise(ErrorCode::DimensionMismatch, "price dimension differs from model l");
    }
    if (!p.interior()) {
        raise(ErrorCode::InvalidArgument, "total excess demand requires an interior price");
    }
    Vector total = Vector::Zero(s.l());
    for (const auto& theta : config.thetas) {
        if (theta.size() != s.m()) {
            raise(ErrorCode::DimensionMismatch, "configuration entry has wrong dimension");
        }
        total += s.eval(theta, p);
    }
    return total;
}

Matrix excess_table(const EconomyModel& model, const Price& p)
{
    const auto& pts = model.micro().support_points();
    Matrix table(static_cast<Eigen::Index>(pts.size()), model.l());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        table.row(static_cast<Eigen::Index>(k)) = model.structure().eval(pts[k], p).transpose();
    }
    return table;
}

}  // namespace stochecon
