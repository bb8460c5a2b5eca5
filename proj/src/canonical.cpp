#include "stochecon/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stochecon {

namespace {

constexpr int kEnvelopePointsPerAxis = 64;
constexpr double kEnvelopeSafety = 1.001;
constexpr int kMaxRejections = 10000000;

using Exponent = std::function<double(const Characteristics&)>;

// log sup of the exponent over a 64-per-axis grid of the support box.
double grid_max(const Exponent& exponent, const Vector& lo, const Vector& hi)
{
    const auto m = lo.size();
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    Characteristics theta(m);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double t = idx[static_cast<std::size_t>(i)] / static_cast<double>(kEnvelopePointsPerAxis - 1);
            theta[i] = lo[i] + t * (hi[i] - lo[i]);
        }
        best = std::max(best, exponent(theta));
        Eigen::Index i = 0;
        while (i < m && ++idx[static_cast<std::size_t>(i)] == kEnvelopePointsPerAxis) {
            idx[static_cast<std::size_t>(i)] = 0;
            ++i;
        }
        if (i == m) {
            break;
        }
    }
    return best;
}

}  // namespace

const std::vector<double>& CanonicalMicro::weights() const
{
    if (weights_.empty()) {
        raise(ErrorCode::NoExactExpectation, "canonical law has no exact support weights");
    }
    return weights_;
}

void CanonicalMicro::set_weights_from_log(const Vector& log_w)
{
    weights_.assign(static_cast<std::size_t>(log_w.size()), 0.0);
    bool clamped = false;
    for (Eigen::Index k = 0; k < log_w.size(); ++k) {
        const double w = std::exp(log_w[k]);
        if (w < kWeightFloor) {
            clamped = clamped || std::isfinite(log_w[k]);
            continue;
        }
        weights_[static_cast<std::size_t>(k)] = w;
    }
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (!(total > 0.0)) {
        raise(ErrorCode::UnboundedTilt, "every tilted weight underflowed");
    }
    for (double& w : weights_) {
        w /= total;
    }
    if (clamped) {
        warnings_.emplace_back("tilted weights below 1e-300 clamped to zero");
    }
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
}

std::size_t CanonicalMicro::sample_index(rng::Stream& stream) const
{
    if (cumulative_.empty()) {
        raise(ErrorCode::NoExactExpectation, "canonical law has no exact support weights");
    }
    const double u = stream.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    auto k = static_cast<std::size_t>(it - cumulative_.begin());
    k = std::min(k, weights_.size() - 1);
    while (weights_[k] == 0.0 && k > 0) {
        --k;  // u landed exactly on a clamped atom's boundary
    }
    return k;
}

Characteristics CanonicalMicro::sample(rng::Stream& stream) const
{
    if (base_.is_discrete()) {
        return base_.support_points()[sample_index(stream)];
    }
    if (!log_accept_) {
        raise(ErrorCode::UnboundedTilt, "continuous canonical law without a bounded support box");
    }
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        Characteristics theta = base_.sample(stream);
        if (std::log(stream.uniform()) < log_accept_(theta)) {
            return theta;
        }
    }
    raise(ErrorCode::UnboundedTilt, "rejection sampler acceptance rate is effectively zero");
}

CanonicalMicro tilt_discrete(const MicroDistribution& base, const StructureFunction& structure, const Price& p,
                             const Vector& alpha)
{
    const EconomyModel model(structure, base, 1);
    const SupportTable table = support_table(model, p);
    const CGFValue value = cgf(table, alpha);
    CanonicalMicro canon(base, p);
    canon.alpha_ = alpha;
    canon.log_lambda_ = value.log_lambda;
    canon.set_weights_from_log((table.log_q + table.z * alpha).array() - value.log_lambda);
    return canon;
}

CanonicalMicro make_canonical(const EconomyModel& model, const Price& p)
{
    const SupportTable table = support_table(model, p);
    const ConjugateSolution sol = solve_conjugate(table);
    CanonicalMicro canon(model.micro(), p);
    canon.alpha_ = sol.alpha;
    canon.log_lambda_ = sol.log_lambda_min;
    canon.set_weights_from_log((table.log_q + table.z * sol.alpha).array() - sol.log_lambda_min);

    if (!model.micro().is_discrete()) {
        const auto& spec = model.micro().as_continuous();
        if (spec.sampler && spec.support_box) {
            const auto structure = model.structure();
            const Vector alpha = sol.alpha;
            Exponent exponent = [structure, alpha, p](const Characteristics& theta) {
                return alpha.dot(structure.eval(theta, p));
            };
            const double top = grid_max(exponent, spec.support_box->first, spec.support_box->second);
            if (!std::isfinite(top)) {
                raise(ErrorCode::UnboundedTilt, "tilt exponent is unbounded on the support box");
            }
            const double log_envelope = top + std::log(kEnvelopeSafety);
            canon.log_accept_ = [exponent, log_envelope](const Characteristics& theta) {
                return exponent(theta) - log_envelope;
            };
        }
    }
    return canon;
}

CanonicalMicro make_bivariate_canonical(const EconomyModel& model, const Price& p, const MacroStructure& x,
                                        const Vector& target_x)
{
    const auto sol = solve_bivariate_conjugate(model, p, x, target_x);
    const SupportTable table = stacked_table(model, x, p, Vector::Zero(x.d));
    Vector ab(sol.alpha.size() + sol.beta.size());
    ab << sol.alpha, sol.beta;
    CanonicalMicro canon(model.micro(), p);
    canon.alpha_ = sol.alpha;
    canon.beta_ = sol.beta;
    canon.log_lambda_ = sol.log_lambda;
    canon.set_weights_from_log((table.log_q + table.z * ab).array() - sol.log_lambda);
    return canon;
}

MicroDistribution as_discrete_law(const CanonicalMicro& canon)
{
    const auto& pts = canon.base().support_points();
    const auto& w = canon.weights();
    std::vector<Characteristics> atoms;
    std::vector<double> weights;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (w[k] > 0.0) {
            atoms.push_back(pts[k]);
            weights.push_back(w[k]);
        }
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& x : weights) {
        x /= total;
    }
    return MicroDistribution::discrete(std::move(atoms), std::move(weights));
}

std::vector<Characteristics> sample_canonical(const CanonicalMicro& canon, std::size_t count, std::uint64_t seed)
{
    std::vector<Characteristics> out;
    out.reserve(count);
    rng::Stream stream(seed, 0);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(canon.sample(stream));
    }
    return out;
}

double canonical_expectation(const CanonicalMicro& canon, const std::function<double(const Characteristics&)>& g)
{
    const auto& pts = canon.base().support_points();
    const auto& w = canon.weights();
    double acc = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (w[k] > 0.0) {
            acc += w[k] * g(pts[k]);
        }
    }
    return acc;
}

}  // namespace stochecon
