#include "stochecon/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "stochecon/canonical.hpp"
#include "stochecon/ldp.hpp"
#include "stochecon/parallel.hpp"

namespace stochecon {

namespace {

enum StreamTag : std::uint64_t { kTagNaive = 1, kTagImportance = 2, kTagConditional = 3, kTagMacro = 4, kTagClt = 5 };

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Setup {
    const EconomyModel& model;
    const std::vector<Characteristics>& atoms;
    std::vector<double> q;
    std::int64_t n;
    std::size_t k;
};

Setup discrete_setup(const EconomyModel& model)
{
    if (!model.micro().is_discrete()) {
        raise(ErrorCode::InvalidArgument, "estimators and oracles need a discrete micro law");
    }
    const auto& atoms = model.micro().support_points();
    return Setup{model, atoms, model.micro().support_weights(), model.n(), atoms.size()};
}

void check_delta(double delta)
{
    if (!(delta > 0.0)) {
        raise(ErrorCode::InvalidArgument, "delta must be positive");
    }
}

std::vector<double> cumulative_of(const std::vector<double>& w)
{
    std::vector<double> c(w.size());
    std::partial_sum(w.begin(), w.end(), c.begin());
    return c;
}

void draw_counts(rng::Stream& stream, const std::vector<double>& cumulative, std::int64_t n, std::vector<double>& counts)
{
    std::fill(counts.begin(), counts.end(), 0.0);
    const double top = cumulative.back();
    const std::size_t last = cumulative.size() - 1;
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = stream.uniform() * top;
        auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        counts[std::min(k, last)] += 1.0;
    }
}

// Equilibrium depends on a configuration only through its atom counts.
class EquilibriumCache {
public:
    EquilibriumCache(const StructureFunction& s, const std::vector<Characteristics>& atoms) : s_(s), atoms_(atoms) {}

    const Price& get(const std::vector<double>& counts)
    {
        auto it = cache_.find(counts);
        if (it != cache_.end()) {
            return it->second;
        }
        auto result = realized_equilibrium(s_, atoms_, counts);
        if (!result.unique) {
            raise(ErrorCode::NonUniqueEquilibrium, "a sampled economy has a non-unique equilibrium");
        }
        return cache_.emplace(counts, std::move(result.price)).first->second;
    }

private:
    const StructureFunction& s_;
    const std::vector<Characteristics>& atoms_;
    std::map<std::vector<double>, Price> cache_;
};

// Runs opts.replicas replicas in fixed chunks; replica r draws from
// Stream(seed, r). Each chunk owns one accumulator; callers reduce in order.
template <class Acc, class Fn>
std::vector<Acc> run_replicas(const Setup& setup, const std::vector<double>& cumulative, const McOptions& opts,
                              std::uint64_t seed, std::int64_t n, Fn&& fn)
{
    if (opts.replicas == 0) {
        raise(ErrorCode::InvalidArgument, "replica count must be positive");
    }
    const std::uint64_t chunk = std::max<std::uint64_t>(opts.chunk_size, 1);
    std::vector<Acc> acc(static_cast<std::size_t>((opts.replicas + chunk - 1) / chunk));
    parallel::for_each_chunk(opts.replicas, chunk, opts.threads,
                             [&](std::size_t c, std::uint64_t begin, std::uint64_t end) {
                                 EquilibriumCache cache(setup.model.structure(), setup.atoms);
                                 std::vector<double> counts(setup.k);
                                 Acc& a = acc[c];
                                 for (std::uint64_t r = begin; r < end; ++r) {
                                     rng::Stream stream(seed, r);
                                     draw_counts(stream, cumulative, n, counts);
                                     fn(a, counts, cache.get(counts));
                                 }
                             });
    return acc;
}

double log_multinomial(const std::vector<int>& c, const std::vector<double>& log_q, std::int64_t n)
{
    double v = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] > 0) {
            v += c[k] * log_q[k] - std::lgamma(c[k] + 1.0);
        }
    }
    return v;
}

template <class Fn>
void compositions(std::vector<int>& c, std::size_t pos, int remaining, Fn& fn)
{
    if (pos + 1 == c.size()) {
        c[pos] = remaining;
        fn(c);
        return;
    }
    for (int v = remaining; v >= 0; --v) {
        c[pos] = v;
        compositions(c, pos + 1, remaining - v, fn);
    }
}

template <class Fn>
void for_each_composition(std::int64_t n, std::size_t k, Fn&& fn)
{
    std::vector<int> c(k, 0);
    compositions(c, 0, static_cast<int>(n), fn);
}

struct OracleHit {
    double log_p;
    std::vector<int> counts;
    Price pstar;
};

struct OracleRun {
    std::vector<OracleHit> hits;
    double log_total = kNegInf;
};

OracleRun enumerate_oracle(const Setup& setup, const Price& p, double delta)
{
    check_delta(delta);
    if (count_vector_states(setup.n, setup.k) > kOracleStateLimit) {
        raise(ErrorCode::TooLarge, "more than 1e7 atom-count vectors to enumerate");
    }
    std::vector<double> log_q(setup.k);
    for (std::size_t j = 0; j < setup.k; ++j) {
        log_q[j] = std::log(setup.q[j]);
    }
    OracleRun run;
    std::vector<double> weights(setup.k);
    for_each_composition(setup.n, setup.k, [&](const std::vector<int>& c) {
        for (std::size_t j = 0; j < setup.k; ++j) {
            weights[j] = c[j];
        }
        auto eq = realized_equilibrium(setup.model.structure(), setup.atoms, weights);
        if (!eq.unique) {
            raise(ErrorCode::NonUniqueEquilibrium, "an enumerated economy has a non-unique equilibrium");
        }
        if (price_distance(eq.price, p) < delta) {
            run.hits.push_back(OracleHit{log_multinomial(c, log_q, setup.n), c, std::move(eq.price)});
        }
    });
    if (!run.hits.empty()) {
        double top = kNegInf;
        for (const auto& h : run.hits) {
            top = std::max(top, h.log_p);
        }
        double s = 0.0;
        for (const auto& h : run.hits) {
            s += std::exp(h.log_p - top);
        }
        run.log_total = top + std::log(s);
    }
    return run;
}

struct WeightedFreqAcc {
    std::uint64_t accepted = 0;
    double w = 0.0;
    double w2 = 0.0;
    std::vector<double> wf, w2f, w2f2;

    void add(double weight, const std::vector<double>& f)
    {
        if (wf.empty()) {
            wf.assign(f.size(), 0.0);
            w2f.assign(f.size(), 0.0);
            w2f2.assign(f.size(), 0.0);
        }
        ++accepted;
        w += weight;
        w2 += weight * weight;
        for (std::size_t j = 0; j < f.size(); ++j) {
            wf[j] += weight * f[j];
            w2f[j] += weight * weight * f[j];
            w2f2[j] += weight * weight * f[j] * f[j];
        }
    }

    void merge(const WeightedFreqAcc& o)
    {
        if (o.accepted == 0) {
            return;
        }
        if (wf.empty()) {
            wf.assign(o.wf.size(), 0.0);
            w2f.assign(o.wf.size(), 0.0);
            w2f2.assign(o.wf.size(), 0.0);
        }
        accepted += o.accepted;
        w += o.w;
        w2 += o.w2;
        for (std::size_t j = 0; j < wf.size(); ++j) {
            wf[j] += o.wf[j];
            w2f[j] += o.w2f[j];
            w2f2[j] += o.w2f2[j];
        }
    }

    // Ratio estimate sum(w f) / sum(w) with its delta-method standard error.
    std::pair<double, double> ratio(std::size_t j) const
    {
        const double mean = wf[j] / w;
        const double ss = std::max(0.0, w2f2[j] - 2.0 * mean * w2f[j] + mean * mean * w2);
        return {mean, std::sqrt(ss) / w};
    }
};

// Weighted acceptance driver shared by the conditional estimators: f(counts,
// p*) returns the per-configuration statistic vector.
template <class Stat>
WeightedFreqAcc conditional_run(const Setup& setup, const Price& p, double delta, const McOptions& opts,
                                bool use_importance, std::uint64_t tag, Stat&& stat)
{
    check_delta(delta);
    std::vector<double> cumulative;
    Vector z_alpha;  // alpha . z(theta_k; p) per atom
    if (use_importance) {
        const auto canon = make_canonical(setup.model, p);
        cumulative = cumulative_of(canon.weights());
        z_alpha = excess_table(setup.model, p) * canon.alpha();
    } else {
        cumulative = cumulative_of(setup.q);
    }
    auto chunks = run_replicas<WeightedFreqAcc>(
        setup, cumulative, opts, rng::derive_seed(opts.seed, tag), setup.n,
        [&](WeightedFreqAcc& acc, const std::vector<double>& counts, const Price& pstar) {
            if (!(price_distance(pstar, p) < delta)) {
                return;
            }
            double weight = 1.0;
            if (use_importance) {
                double az = 0.0;
                for (std::size_t j = 0; j < counts.size(); ++j) {
                    az += counts[j] * z_alpha[static_cast<Eigen::Index>(j)];
                }
                // Likelihood ratio up to the constant factor lambda^n, which
                // cancels in the ratio estimate.
                weight = std::exp(-az);
            }
            acc.add(weight, stat(counts, pstar));
        });
    WeightedFreqAcc total;
    for (const auto& c : chunks) {
        total.merge(c);
    }
    if (total.accepted == 0) {
        raise(ErrorCode::NoAcceptedConfigurations, "no sampled economy had its equilibrium in the delta-ball");
    }
    return total;
}

}  // namespace

double count_vector_states(std::int64_t n, std::size_t k)
{
    if (k == 0) {
        return 0.0;
    }
    const double log_c = std::lgamma(static_cast<double>(n + static_cast<std::int64_t>(k))) -
                         std::lgamma(static_cast<double>(k)) - std::lgamma(static_cast<double>(n) + 1.0);
    return std::round(std::exp(log_c));
}

double total_variation(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        raise(ErrorCode::DimensionMismatch, "distributions of different length");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += std::abs(a[k] - b[k]);
    }
    return 0.5 * s;
}

Estimate naive_probability(const EconomyModel& model, const Price& p, double delta, const McOptions& opts)
{
    check_delta(delta);
    const Setup setup = discrete_setup(model);
    struct Acc {
        std::uint64_t hits = 0;
    };
    const auto chunks = run_replicas<Acc>(setup, cumulative_of(setup.q), opts, rng::derive_seed(opts.seed, kTagNaive),
                                          setup.n, [&](Acc& a, const std::vector<double>&, const Price& pstar) {
                                              a.hits += price_distance(pstar, p) < delta ? 1 : 0;
                                          });
    std::uint64_t hits = 0;
    for (const auto& c : chunks) {
        hits += c.hits;
    }
    Estimate est;
    est.method = EstimateMethod::Naive;
    est.replicas = opts.replicas;
    const double r = static_cast<double>(opts.replicas);
    est.value = static_cast<double>(hits) / r;
    est.std_error = std::sqrt(est.value * (1.0 - est.value) / r);
    est.log_value = hits ? std::log(est.value) : kNegInf;
    est.log_std_error = hits ? est.std_error / est.value : std::numeric_limits<double>::infinity();
    if (hits == 0) {
        est.zero_hits = true;
        est.warnings.emplace_back("ZeroHits: naive Monte Carlo saw no event; use importance sampling");
    }
    return est;
}

Estimate importance_probability(const EconomyModel& model, const Price& p, double delta, const McOptions& opts)
{
    check_delta(delta);
    const Setup setup = discrete_setup(model);
    const auto canon = make_canonical(model, p);
    const Vector z_alpha = excess_table(model, p) * canon.alpha();
    const double log_scale = static_cast<double>(setup.n) * canon.log_lambda();

    // Weights are stored relative to lambda^n: w = exp(-alpha . Z(omega; p)).
    struct Acc {
        std::uint64_t hits = 0;
        double s1 = 0.0;
        double s2 = 0.0;
    };
    const auto chunks = run_replicas<Acc>(
        setup, cumulative_of(canon.weights()), opts, rng::derive_seed(opts.seed, kTagImportance), setup.n,
        [&](Acc& a, const std::vector<double>& counts, const Price& pstar) {
            if (!(price_distance(pstar, p) < delta)) {
                return;
            }
            double az = 0.0;
            for (std::size_t j = 0; j < counts.size(); ++j) {
                az += counts[j] * z_alpha[static_cast<Eigen::Index>(j)];
            }
            const double w = std::exp(-az);
            ++a.hits;
            a.s1 += w;
            a.s2 += w * w;
        });
    Acc total;
    for (const auto& c : chunks) {
        total.hits += c.hits;
        total.s1 += c.s1;
        total.s2 += c.s2;
    }

    Estimate est;
    est.method = EstimateMethod::Importance;
    est.replicas = opts.replicas;
    est.warnings = canon.warnings();
    const double r = static_cast<double>(opts.replicas);
    if (total.hits == 0) {
        est.zero_hits = true;
        est.log_value = kNegInf;
        est.log_std_error = std::numeric_limits<double>::infinity();
        est.warnings.emplace_back("ZeroHits: no canonical sample hit the delta-ball");
        return est;
    }
    const double mean = total.s1 / r;
    const double var = r > 1.0 ? std::max(0.0, (total.s2 - r * mean * mean) / (r - 1.0)) : 0.0;
    const double rel_se = std::sqrt(var / r) / mean;
    est.log_value = log_scale + std::log(mean);
    est.value = std::exp(est.log_value);
    est.std_error = est.value * rel_se;
    est.log_std_error = rel_se;
    return est;
}

Estimate oracle_probability(const EconomyModel& model, const Price& p, double delta)
{
    check_delta(delta);
    Estimate est;
    est.method = EstimateMethod::Oracle;
    if (delta >= 1.0) {
        // The sup-norm ball of radius 1 around an interior price covers the simplex.
        est.value = 1.0;
        est.log_value = 0.0;
        return est;
    }
    const Setup setup = discrete_setup(model);
    const auto run = enumerate_oracle(setup, p, delta);
    est.log_value = run.log_total;
    est.value = std::exp(run.log_total);
    return est;
}

EmpiricalDistribution conditional_empirical(const EconomyModel& model, const Price& p, double delta,
                                            const McOptions& opts, bool use_importance)
{
    const Setup setup = discrete_setup(model);
    const double inv_n = 1.0 / static_cast<double>(setup.n);
    const auto total = conditional_run(setup, p, delta, opts, use_importance, kTagConditional,
                                       [&](const std::vector<double>& counts, const Price&) {
                                           std::vector<double> f(counts.size());
                                           for (std::size_t j = 0; j < counts.size(); ++j) {
                                               f[j] = counts[j] * inv_n;
                                           }
                                           return f;
                                       });
    EmpiricalDistribution out;
    out.accepted_count = total.accepted;
    out.weight_sum = total.w;
    for (std::size_t j = 0; j < setup.k; ++j) {
        const auto [mean, se] = total.ratio(j);
        out.frequencies.push_back(mean);
        out.std_errors.push_back(se);
    }
    return out;
}

EmpiricalDistribution oracle_conditional_empirical(const EconomyModel& model, const Price& p, double delta)
{
    const Setup setup = discrete_setup(model);
    const auto run = enumerate_oracle(setup, p, delta);
    if (run.hits.empty()) {
        raise(ErrorCode::NoAcceptedConfigurations, "the equilibrium event has probability zero");
    }
    EmpiricalDistribution out;
    out.frequencies.assign(setup.k, 0.0);
    out.std_errors.assign(setup.k, 0.0);
    out.accepted_count = run.hits.size();
    out.weight_sum = std::exp(run.log_total);
    for (const auto& h : run.hits) {
        const double w = std::exp(h.log_p - run.log_total);
        for (std::size_t j = 0; j < setup.k; ++j) {
            out.frequencies[j] += w * h.counts[j] / static_cast<double>(setup.n);
        }
    }
    return out;
}

MacroMeanEstimate conditional_macro_mean(const EconomyModel& model, const Price& p, double delta,
                                         const MacroStructure& x, const McOptions& opts, bool use_importance)
{
    if (x.d != 1) {
        raise(ErrorCode::DimensionMismatch, "conditional macro mean takes a scalar macro variable");
    }
    const Setup setup = discrete_setup(model);
    const double inv_n = 1.0 / static_cast<double>(setup.n);
    const auto total = conditional_run(setup, p, delta, opts, use_importance, kTagMacro,
                                       [&](const std::vector<double>& counts, const Price& pstar) {
                                           double s = 0.0;
                                           for (std::size_t j = 0; j < counts.size(); ++j) {
                                               if (counts[j] > 0.0) {
                                                   s += counts[j] * x.eval(setup.atoms[j], pstar)[0];
                                               }
                                           }
                                           return std::vector<double>{s * inv_n};
                                       });
    MacroMeanEstimate out;
    const auto [mean, se] = total.ratio(0);
    out.conditional.value = mean;
    out.conditional.std_error = se;
    out.conditional.log_value = mean > 0.0 ? std::log(mean) : kNegInf;
    out.conditional.replicas = opts.replicas;
    out.conditional.method = use_importance ? EstimateMethod::Importance : EstimateMethod::Naive;
    const auto canon = make_canonical(model, p);
    out.canonical_prediction = canonical_expectation(canon, [&](const Characteristics& t) { return x.eval(t, p)[0]; });
    return out;
}

MacroMeanEstimate oracle_conditional_macro_mean(const EconomyModel& model, const Price& p, double delta,
                                                const MacroStructure& x)
{
    if (x.d != 1) {
        raise(ErrorCode::DimensionMismatch, "conditional macro mean takes a scalar macro variable");
    }
    const Setup setup = discrete_setup(model);
    const auto run = enumerate_oracle(setup, p, delta);
    if (run.hits.empty()) {
        raise(ErrorCode::NoAcceptedConfigurations, "the equilibrium event has probability zero");
    }
    MacroMeanEstimate out;
    out.conditional.method = EstimateMethod::Oracle;
    double acc = 0.0;
    for (const auto& h : run.hits) {
        const double w = std::exp(h.log_p - run.log_total);
        double s = 0.0;
        for (std::size_t j = 0; j < setup.k; ++j) {
            if (h.counts[j] > 0) {
                s += h.counts[j] * x.eval(setup.atoms[j], h.pstar)[0];
            }
        }
        acc += w * s / static_cast<double>(setup.n);
    }
    out.conditional.value = acc;
    out.conditional.log_value = acc > 0.0 ? std::log(acc) : kNegInf;
    const auto canon = make_canonical(model, p);
    out.canonical_prediction = canonical_expectation(canon, [&](const Characteristics& t) { return x.eval(t, p)[0]; });
    return out;
}

CltSeries clt_covariance(const EconomyModel& model, std::span<const std::int64_t> n_grid, const McOptions& opts)
{
    if (n_grid.empty()) {
        raise(ErrorCode::InvalidArgument, "empty n grid");
    }
    const Setup setup = discrete_setup(model);
    const Price pe = expected_equilibrium(model);
    const int l = model.l();
    const auto cumulative = cumulative_of(setup.q);

    struct Acc {
        std::uint64_t count = 0;
        Vector s1;
        Matrix s2;
    };
    CltSeries series;
    std::int64_t largest = 0;
    for (const std::int64_t n : n_grid) {
        if (n < 1) {
            raise(ErrorCode::InvalidArgument, "agent counts must be positive");
        }
        const double root_n = std::sqrt(static_cast<double>(n));
        const auto chunks = run_replicas<Acc>(setup, cumulative, opts,
                                              rng::derive_seed(rng::derive_seed(opts.seed, kTagClt),
                                                               static_cast<std::uint64_t>(n)),
                                              n, [&](Acc& a, const std::vector<double>&, const Price& pstar) {
                                                  if (a.count == 0) {
                                                      a.s1 = Vector::Zero(l);
                                                      a.s2 = Matrix::Zero(l, l);
                                                  }
                                                  const Vector d = root_n * (pstar.head() - pe.head());
                                                  ++a.count;
                                                  a.s1 += d;
                                                  a.s2.noalias() += d * d.transpose();
                                              });
        Vector s1 = Vector::Zero(l);
        Matrix s2 = Matrix::Zero(l, l);
        std::uint64_t count = 0;
        for (const auto& c : chunks) {
            if (c.count) {
                count += c.count;
                s1 += c.s1;
                s2 += c.s2;
            }
        }
        const double r = static_cast<double>(count);
        Matrix cov = (s2 - s1 * s1.transpose() / r) / std::max(1.0, r - 1.0);
        cov = 0.5 * (cov + cov.transpose());
        series.n.push_back(n);
        series.covariance.push_back(cov);
        if (n >= largest) {
            largest = n;
            series.sigma = cov;
        }
    }
    return series;
}

Matrix delta_method_sigma(const EconomyModel& model)
{
    if (!model.micro().has_exact_expectation()) {
        raise(ErrorCode::NoExactExpectation, "delta-method covariance needs atoms or a quadrature rule");
    }
    const int l = model.l();
    const Price pe = expected_equilibrium(model);
    const Vector zero = Vector::Zero(l);
    const Matrix c = cgf(model, zero, pe).hess;
    auto shifted = [&](int j, double h) {
        Vector coords = pe.coords();
        coords[j] += h;
        coords[l] -= h;
        return Price(coords);
    };
    Matrix jac(l, l);
    for (int j = 0; j < l; ++j) {
        const double h = 1e-6 * std::min(pe[j], pe[l]);
        jac.col(j) = (cgf(model, zero, shifted(j, h)).grad - cgf(model, zero, shifted(j, -h)).grad) / (2.0 * h);
    }
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) {
        raise(ErrorCode::SingularSigma, "mean excess demand has a singular price Jacobian");
    }
    const Matrix inv = lu.inverse();
    return inv * c * inv.transpose();
}

double clt_entropy_approx(const EconomyModel& model, const Price& p, const Matrix& sigma)
{
    const int l = model.l();
    if (sigma.rows() != l || sigma.cols() != l) {
        raise(ErrorCode::DimensionMismatch, "sigma must be l x l");
    }
    Eigen::FullPivLU<Matrix> lu(sigma);
    if (!lu.isInvertible() || sigma.isZero(0.0)) {
        raise(ErrorCode::SingularSigma, "sigma is not invertible");
    }
    const Price pe = expected_equilibrium(model);
    const Vector d = p.head() - pe.head();
    return 0.5 * static_cast<double>(model.n()) * d.dot(lu.solve(d));
}

}  // namespace stochecon
