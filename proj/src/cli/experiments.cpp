#include "stochecon/cli/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Core>

#include "stochecon/canonical.hpp"
#include "stochecon/equilibrium.hpp"
#include "stochecon/ldp.hpp"
#include "stochecon/montecarlo.hpp"
#include "stochecon/thermo.hpp"

namespace stochecon::cli {

RunError::RunError(std::string path, ErrorCode code, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)), code_(code)
{
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Enumerate exactly below this many count vectors when the method is "auto".
constexpr double kAutoOracleStates = 1e6;

template <class F>
auto at(const std::string& path, F&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        throw RunError(path, e.code(), e.what());
    }
}

McOptions mc_options(const ExperimentConfig& cfg, std::uint64_t replicas)
{
    McOptions o;
    o.replicas = replicas;
    o.seed = cfg.params.seed;
    o.threads = cfg.threads;
    return o;
}

std::vector<std::string> price_columns(const std::string& stem, int l)
{
    std::vector<std::string> cols;
    for (int j = 1; j <= l + 1; ++j) {
        cols.push_back(stem + std::to_string(j));
    }
    return cols;
}

void append_price(std::vector<Cell>& row, const Price& p)
{
    for (Eigen::Index j = 0; j < p.coords().size(); ++j) {
        row.emplace_back(p.coords()[j]);
    }
}

MacroStructure non_survival_macro(double level)
{
    const auto spec = SurvivalSpec::constant(level);
    return MacroStructure{1, [spec](const Characteristics& t, const Price& p) {
                              return Vector::Constant(1, is_non_surviving(t, p, spec) ? 1.0 : 0.0);
                          }};
}

std::string pick_method(const std::string& requested, const EconomyModel& model)
{
    if (requested != "auto") {
        return requested;
    }
    const auto k = model.micro().support_points().size();
    return count_vector_states(model.n(), k) <= kAutoOracleStates ? "oracle" : "importance";
}

ExperimentResult run_equilibrium(const ExperimentConfig& cfg)
{
    const auto& model = *cfg.model;
    const int l = model.l();
    ExperimentResult res;
    res.table.header = {"kind", "method", "unique"};
    for (auto& c : price_columns("p", l)) {
        res.table.header.push_back(c);
    }
    res.table.header.push_back("residual_inf");

    const Price pe = at("structure", [&] { return expected_equilibrium(model); });
    const Vector mean = at("structure", [&] { return cgf(model, Vector::Zero(l), pe).grad; });
    std::vector<Cell> row{std::string("expected"),
                          std::string(model.structure().kind() == StructureKind::CobbDouglas ? "eigenvector"
                                                                                              : "bisection"),
                          std::int64_t{1}};
    append_price(row, pe);
    row.emplace_back(mean.cwiseAbs().maxCoeff());
    res.table.rows.push_back(std::move(row));

    const auto& atoms = model.micro().support_points();
    for (std::size_t i = 0; i < cfg.params.configurations.size(); ++i) {
        const auto& counts = cfg.params.configurations[i];
        const std::string path = "params.configurations[" + std::to_string(i) + "]";
        const auto r = at(path, [&] { return realized_equilibrium(model.structure(), atoms, counts); });
        std::vector<Cell> cr{"configuration " + std::to_string(i),
                             std::string(r.method == EquilibriumMethod::Eigenvector ? "eigenvector" : "bisection"),
                             std::int64_t{r.unique ? 1 : 0}};
        append_price(cr, r.price);
        cr.emplace_back(r.residual.cwiseAbs().maxCoeff());
        res.table.rows.push_back(std::move(cr));
        for (const auto& w : r.warnings) {
            res.warnings.push_back(path + ": " + w);
        }
    }
    return res;
}

ExperimentResult run_entropy_sweep(const ExperimentConfig& cfg)
{
    const auto& model = *cfg.model;
    ExperimentResult res;
    res.table.header = {"p1", "alpha", "log_lambda", "I", "clt_approx"};
    const Matrix sigma = at("structure", [&] { return delta_method_sigma(model); });
    for (std::size_t i = 0; i < cfg.params.grid.size(); ++i) {
        const Price p = Price::scalar(cfg.params.grid[i]);
        const double approx = at("params.grid", [&] { return clt_entropy_approx(model, p, sigma); });
        try {
            const auto rep = entropy(model, p);
            res.table.rows.push_back({p[0], rep.alpha[0], rep.log_lambda, rep.I, approx});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotPossibleEquilibriumPrice) {
                throw RunError("params.grid[" + std::to_string(i) + "]", e.code(), e.what());
            }
            // Outside the possible prices the observation has probability 0.
            res.table.rows.push_back({p[0], kNaN, kNaN, std::numeric_limits<double>::infinity(), approx});
            res.warnings.push_back("params.grid[" + std::to_string(i) + "]: not a possible equilibrium price");
        }
    }
    return res;
}

ExperimentResult run_tld(const ExperimentConfig& cfg)
{
    const Price& p = *cfg.params.price;
    ExperimentResult res;
    res.table.header = {"n", "log_p_naive", "log_p_importance", "rate_gap", "std_err"};
    const auto naive_reps = cfg.params.naive_replicas ? cfg.params.naive_replicas : cfg.params.replicas;
    for (const auto n : cfg.params.n_grid) {
        const auto model = cfg.model->with_n(n);
        const double rate = at("params.price", [&] { return entropy(model, p).per_agent_rate; });
        const auto naive = at("params.price", [&] {
            return naive_probability(model, p, cfg.params.delta, mc_options(cfg, naive_reps));
        });
        const auto imp = at("params.price", [&] {
            return importance_probability(model, p, cfg.params.delta, mc_options(cfg, cfg.params.replicas));
        });
        if (naive.zero_hits) {
            res.warnings.push_back("n = " + std::to_string(n) + ": naive sampler saw no event");
        }
        const double gap = std::abs(-imp.log_value / static_cast<double>(n) - rate);
        res.table.rows.push_back({n, naive.log_value, imp.log_value, gap, imp.log_std_error});
    }
    return res;
}

ExperimentResult run_gcp(const ExperimentConfig& cfg)
{
    const Price& p = *cfg.params.price;
    const auto k = cfg.model->micro().support_points().size();
    const auto canon = at("params.price", [&] { return make_canonical(*cfg.model, p); });
    const auto& weights = canon.weights();

    ExperimentResult res;
    res.table.header = {"n", "method", "accepted", "tv_distance"};
    for (std::size_t j = 1; j <= k; ++j) {
        res.table.header.push_back("freq" + std::to_string(j));
    }
    for (std::size_t j = 1; j <= k; ++j) {
        res.table.header.push_back("canonical" + std::to_string(j));
    }
    for (const auto n : cfg.params.n_grid) {
        const auto model = cfg.model->with_n(n);
        const auto method = pick_method(cfg.params.method, model);
        const auto emp = at("params.price", [&] {
            if (method == "oracle") {
                return oracle_conditional_empirical(model, p, cfg.params.delta);
            }
            return conditional_empirical(model, p, cfg.params.delta, mc_options(cfg, cfg.params.replicas),
                                         method == "importance");
        });
        std::vector<Cell> row{n, method, static_cast<std::int64_t>(emp.accepted_count),
                              total_variation(emp.frequencies, weights)};
        for (double f : emp.frequencies) {
            row.emplace_back(f);
        }
        for (double w : weights) {
            row.emplace_back(w);
        }
        res.table.rows.push_back(std::move(row));
    }
    for (const auto& w : canon.warnings()) {
        res.warnings.push_back(w);
    }
    return res;
}

ExperimentResult run_survival(const ExperimentConfig& cfg)
{
    const Price& p = *cfg.params.price;
    const auto x = non_survival_macro(*cfg.survival_level);
    ExperimentResult res;
    res.table.header = {"n",         "p1",         "delta", "method", "conditional_nonsurvival", "std_err",
                        "canonical", "z_score",    "I",     "I_px"};
    std::vector<std::int64_t> ns = cfg.params.n_grid;
    if (ns.empty()) {
        ns.push_back(cfg.model->n());
    }
    for (const auto n : ns) {
        const auto model = cfg.model->with_n(n);
        const auto method = pick_method(cfg.params.method, model);
        const auto mm = at("params.price", [&] {
            if (method == "oracle") {
                return oracle_conditional_macro_mean(model, p, cfg.params.delta, x);
            }
            return conditional_macro_mean(model, p, cfg.params.delta, x, mc_options(cfg, cfg.params.replicas),
                                          method == "importance");
        });
        const double I = at("params.price", [&] { return entropy(model, p).I; });
        // At the canonical macro value the composite entropy collapses to I(p).
        const double I_px = at("params.price", [&] {
            return bivariate_entropy(model, p, x, Vector::Constant(1, mm.canonical_prediction)).I;
        });
        const double diff = mm.conditional.value - mm.canonical_prediction;
        const double z = mm.conditional.std_error > 0.0 ? diff / mm.conditional.std_error : kNaN;
        res.table.rows.push_back({n, p[0], cfg.params.delta, method, mm.conditional.value, mm.conditional.std_error,
                                  mm.canonical_prediction, z, I, I_px});
        for (const auto& w : mm.conditional.warnings) {
            res.warnings.push_back("n = " + std::to_string(n) + ": " + w);
        }
    }
    return res;
}

ExperimentResult run_clt(const ExperimentConfig& cfg)
{
    const auto& model = *cfg.model;
    ExperimentResult res;
    res.table.header = {"n", "variance_mc", "variance_delta_method", "curvature", "product"};
    const Price pe = at("structure", [&] { return expected_equilibrium(model); });
    const double h = 1e-3 * std::min(pe[0], pe[1]);
    auto rate = [&](double t) {
        return at("structure", [&] { return entropy(model, Price::scalar(t)).per_agent_rate; });
    };
    const double curvature = (rate(pe[0] + h) - 2.0 * rate(pe[0]) + rate(pe[0] - h)) / (h * h);
    const double delta_var = at("structure", [&] { return delta_method_sigma(model)(0, 0); });
    const auto series =
        at("params.n_grid", [&] { return clt_covariance(model, cfg.params.n_grid, mc_options(cfg, cfg.params.replicas)); });
    for (std::size_t i = 0; i < series.n.size(); ++i) {
        const double v = series.covariance[i](0, 0);
        res.table.rows.push_back({series.n[i], v, delta_var, curvature, curvature * v});
    }
    return res;
}

ExperimentResult run_gas(const ExperimentConfig& cfg)
{
    ExperimentResult res;
    res.table.header = {"beta",           "log_lambda",        "log_lambda_engine", "energy",
                        "energy_engine",  "entropy_closed",    "entropy_partition", "entropy_engine",
                        "radius",         "points_per_axis"};
    for (std::size_t i = 0; i < cfg.gas_betas.size(); ++i) {
        GasSpec spec = *cfg.gas;
        spec.beta = cfg.gas_betas[i];
        const double sigma = std::sqrt(spec.m / spec.beta);
        const double radius = cfg.gas_radius.value_or(std::max(10.0, 8.0 * sigma));
        const int points =
            cfg.gas_points.value_or(std::min(401, 2 * static_cast<int>(std::ceil(radius / (0.5 * sigma))) + 1));
        const std::string path = "gas.betas[" + std::to_string(i) + "]";
        const auto fx = at(path, [&] { return gas_cgf_fixture(spec, radius, points); });
        const auto s = gas_entropy(spec);
        res.table.rows.push_back({spec.beta, gas_partition(spec), fx.log_lambda,
                                  gas_internal_energy(spec) / static_cast<double>(spec.n), fx.energy, s.closed_form,
                                  s.from_partition, fx.entropy, radius, static_cast<std::int64_t>(points)});
    }
    return res;
}

std::string timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    switch (cfg.experiment) {
    case ExperimentKind::Equilibrium:
        return run_equilibrium(cfg);
    case ExperimentKind::EntropySweep:
        return run_entropy_sweep(cfg);
    case ExperimentKind::TldVerify:
        return run_tld(cfg);
    case ExperimentKind::GcpVerify:
        return run_gcp(cfg);
    case ExperimentKind::Survival:
        return run_survival(cfg);
    case ExperimentKind::CltCompare:
        return run_clt(cfg);
    case ExperimentKind::GasFixtures:
        return run_gas(cfg);
    }
    throw std::logic_error("unhandled experiment");
}

nlohmann::json make_manifest(const ExperimentConfig& cfg, const ExperimentResult& result, double runtime_seconds)
{
    nlohmann::json m;
    m["config"] = cfg.echo;
    m["seed"] = cfg.params.seed;
    m["experiment"] = std::string(to_string(cfg.experiment));
    m["runtime_seconds"] = runtime_seconds;
    m["warnings"] = result.warnings;
    m["replicas"] = cfg.params.replicas;
    m["threads"] = cfg.threads;
    m["csv"] = cfg.output.csv;
    m["rows"] = result.table.rows.size();
    m["timestamp"] = timestamp();
    m["versions"] = {{"stochecon", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__}};
    return m;
}

int run(const RunRequest& request, std::ostream& out, std::ostream& err)
{
    ExperimentConfig cfg;
    try {
        cfg = load_config(request.config, request.overrides, request.experiment);
    } catch (const ConfigError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
    if (request.validate_only) {
        if (!request.quiet) {
            out << request.config.string() << ": valid " << to_string(cfg.experiment) << " configuration\n";
        }
        return kExitOk;
    }

    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    try {
        result = run_experiment(cfg);
    } catch (const RunError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::error_code ec;
    std::filesystem::create_directories(cfg.output.dir, ec);
    if (ec) {
        err << "validation error: output.dir: cannot create " << cfg.output.dir.string() << ": " << ec.message()
            << '\n';
        return kExitValidation;
    }
    const auto csv_path = cfg.output.dir / cfg.output.csv;
    const auto manifest_path = cfg.output.dir / cfg.output.manifest;
    {
        std::ofstream f(csv_path, std::ios::binary);
        if (!f) {
            err << "validation error: output.csv: cannot write " << csv_path.string() << '\n';
            return kExitValidation;
        }
        write_csv(f, result.table);
    }
    {
        std::ofstream f(manifest_path);
        if (!f) {
            err << "validation error: output.manifest: cannot write " << manifest_path.string() << '\n';
            return kExitValidation;
        }
        f << make_manifest(cfg, result, seconds).dump(2) << '\n';
    }
    if (!request.quiet) {
        out << to_string(cfg.experiment) << ": " << result.table.rows.size() << " rows -> " << csv_path.string()
            << " (" << std::fixed << std::setprecision(2) << seconds << " s)\n";
        for (const auto& w : result.warnings) {
            out << "warning: " << w << '\n';
        }
    }
    return kExitOk;
}

}  // namespace stochecon::cli
