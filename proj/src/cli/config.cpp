#include "stochecon/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "stochecon/error.hpp"

namespace stochecon::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(path + ": " + message), path_(std::move(path))
{
}

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kExperimentNames[] = {
    {ExperimentKind::Equilibrium, "equilibrium"}, {ExperimentKind::EntropySweep, "entropy-sweep"},
    {ExperimentKind::TldVerify, "tld-verify"},    {ExperimentKind::GcpVerify, "gcp-verify"},
    {ExperimentKind::Survival, "survival"},       {ExperimentKind::CltCompare, "clt-compare"},
    {ExperimentKind::GasFixtures, "gas-fixtures"},
};

std::string join(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

std::string index(const std::string& base, std::size_t i)
{
    return base + "[" + std::to_string(i) + "]";
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) {
        throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    }
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, value] : obj.items()) {
        if (!ok.contains(key)) {
            throw ConfigError(join(path, key), "unknown field");
        }
    }
}

double get_real(const json& v, const std::string& path)
{
    if (!v.is_number()) {
        throw ConfigError(path, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ConfigError(path, "expected a finite number");
    }
    return d;
}

std::int64_t get_int(const json& v, const std::string& path)
{
    if (!v.is_number_integer()) {
        throw ConfigError(path, "expected an integer");
    }
    return v.get<std::int64_t>();
}

std::uint64_t get_uint(const json& v, const std::string& path)
{
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(path, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& path)
{
    if (!v.is_string()) {
        throw ConfigError(path, "expected a string");
    }
    return v.get<std::string>();
}

std::vector<double> get_reals(const json& v, const std::string& path)
{
    if (!v.is_array()) {
        throw ConfigError(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(get_real(v[i], index(path, i)));
    }
    return out;
}

Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Characteristics parse_cd_atom(const json& a, const std::string& path, int l)
{
    check_keys(a, path, {"shares", "endowment"});
    if (!a.contains("shares") || !a.contains("endowment")) {
        throw ConfigError(path, "Cobb-Douglas atoms need shares and endowment");
    }
    const auto shares = get_reals(a["shares"], join(path, "shares"));
    const auto endow = get_reals(a["endowment"], join(path, "endowment"));
    const auto dim = static_cast<std::size_t>(l + 1);
    if (shares.size() != dim) {
        throw ConfigError(join(path, "shares"), "expected " + std::to_string(dim) + " entries");
    }
    if (endow.size() != dim) {
        throw ConfigError(join(path, "endowment"), "expected " + std::to_string(dim) + " entries");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        if (shares[j] < 0.0) {
            throw ConfigError(index(join(path, "shares"), j), "shares must be non-negative");
        }
        if (endow[j] < 0.0) {
            throw ConfigError(index(join(path, "endowment"), j), "endowments must be non-negative");
        }
        total += shares[j];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError(join(path, "shares"), "shares sum to " + std::to_string(total) + ", expected 1");
    }
    return make_cd_characteristics(to_vector(shares), to_vector(endow));
}

EconomyModel parse_model(const json& doc, const std::string& structure, int l, std::int64_t n)
{
    if (!doc.contains("micro")) {
        throw ConfigError("micro", "missing");
    }
    const json& micro = doc["micro"];
    check_keys(micro, "micro", {"atoms", "weights"});
    if (!micro.contains("atoms") || !micro["atoms"].is_array() || micro["atoms"].empty()) {
        throw ConfigError("micro.atoms", "expected a non-empty array");
    }
    if (!micro.contains("weights")) {
        throw ConfigError("micro.weights", "missing");
    }
    const auto weights = get_reals(micro["weights"], "micro.weights");
    const json& atoms_json = micro["atoms"];
    if (weights.size() != atoms_json.size()) {
        throw ConfigError("micro.weights", "expected one weight per atom (" + std::to_string(atoms_json.size()) + ")");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0)) {
            throw ConfigError(index("micro.weights", i), "weights must be positive");
        }
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError("micro.weights", "weights sum to " + std::to_string(total) + ", expected 1");
    }

    StructureFunction s = make_cd_structure(1);
    std::vector<Characteristics> atoms;
    for (std::size_t i = 0; i < atoms_json.size(); ++i) {
        const std::string path = index("micro.atoms", i);
        if (structure == "cobb_douglas" || structure == "survival") {
            atoms.push_back(parse_cd_atom(atoms_json[i], path, l));
        } else {
            const auto v = get_reals(atoms_json[i], path);
            const std::size_t want = structure == "custom-reference" ? 2 : static_cast<std::size_t>(l);
            if (v.size() != want) {
                throw ConfigError(path, "expected " + std::to_string(want) + " entries");
            }
            atoms.push_back(to_vector(v));
        }
    }
    if (structure == "cobb_douglas" || structure == "survival") {
        s = make_cd_structure(l);
    } else if (structure == "custom-reference") {
        if (l != 1) {
            throw ConfigError("l", "custom-reference structure has l = 1");
        }
        s = make_ratio_structure();
    } else {
        s = make_tabulated_structure(l);
    }
    try {
        return EconomyModel(std::move(s), MicroDistribution::discrete(std::move(atoms), weights), n);
    } catch (const Error& e) {
        throw ConfigError("micro.atoms", e.what());
    }
}

Price parse_price(const json& v, int l, const std::string& path)
{
    try {
        if (v.is_number()) {
            if (l != 1) {
                throw ConfigError(path, "a scalar price needs l = 1");
            }
            return Price::scalar(get_real(v, path));
        }
        const auto coords = get_reals(v, path);
        if (coords.size() != static_cast<std::size_t>(l + 1)) {
            throw ConfigError(path, "expected " + std::to_string(l + 1) + " coordinates");
        }
        return validate_price(to_vector(coords));
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

std::vector<double> parse_grid(const json& v, const std::string& path)
{
    std::vector<double> grid;
    if (v.is_object()) {
        check_keys(v, path, {"from", "to", "points"});
        if (!v.contains("from") || !v.contains("to") || !v.contains("points")) {
            throw ConfigError(path, "a grid range needs from, to and points");
        }
        const double lo = get_real(v["from"], join(path, "from"));
        const double hi = get_real(v["to"], join(path, "to"));
        const auto k = get_int(v["points"], join(path, "points"));
        if (k < 2) {
            throw ConfigError(join(path, "points"), "need at least two points");
        }
        for (std::int64_t i = 0; i < k; ++i) {
            grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1));
        }
    } else {
        grid = get_reals(v, path);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0)) {
            throw ConfigError(index(path, i), "grid prices must lie in (0, 1)");
        }
    }
    return grid;
}

Params parse_params(const json& v, int l)
{
    check_keys(v, "params",
               {"price", "delta", "replicas", "naive_replicas", "seed", "grid", "n_grid", "displacements", "method",
                "configurations"});
    Params p;
    if (v.contains("price")) {
        p.price = parse_price(v["price"], l, "params.price");
    }
    if (v.contains("delta")) {
        p.delta = get_real(v["delta"], "params.delta");
        if (!(p.delta > 0.0)) {
            throw ConfigError("params.delta", "delta must be positive");
        }
    }
    if (v.contains("replicas")) {
        p.replicas = get_uint(v["replicas"], "params.replicas");
    }
    if (v.contains("naive_replicas")) {
        p.naive_replicas = get_uint(v["naive_replicas"], "params.naive_replicas");
    }
    if (v.contains("seed")) {
        p.seed = get_uint(v["seed"], "params.seed");
    }
    if (v.contains("grid")) {
        p.grid = parse_grid(v["grid"], "params.grid");
    }
    if (v.contains("n_grid")) {
        const json& g = v["n_grid"];
        if (!g.is_array()) {
            throw ConfigError("params.n_grid", "expected an array of integers");
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto n = get_int(g[i], index("params.n_grid", i));
            if (n < 1) {
                throw ConfigError(index("params.n_grid", i), "agent counts must be positive");
            }
            p.n_grid.push_back(n);
        }
    }
    if (v.contains("displacements")) {
        p.displacements = get_reals(v["displacements"], "params.displacements");
    }
    if (v.contains("method")) {
        p.method = get_string(v["method"], "params.method");
        if (p.method != "auto" && p.method != "oracle" && p.method != "importance" && p.method != "naive") {
            throw ConfigError("params.method", "expected auto, oracle, importance or naive");
        }
    }
    if (v.contains("configurations")) {
        const json& c = v["configurations"];
        if (!c.is_array()) {
            throw ConfigError("params.configurations", "expected an array of atom-count arrays");
        }
        for (std::size_t i = 0; i < c.size(); ++i) {
            p.configurations.push_back(get_reals(c[i], index("params.configurations", i)));
        }
    }
    return p;
}

void require(bool ok, const std::string& path, const std::string& message)
{
    if (!ok) {
        throw ConfigError(path, message);
    }
}

}  // namespace

std::string_view to_string(ExperimentKind kind)
{
    for (const auto& [k, name] : kExperimentNames) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

std::optional<ExperimentKind> experiment_from_string(std::string_view name)
{
    for (const auto& [k, n] : kExperimentNames) {
        if (n == name) {
            return k;
        }
    }
    return std::nullopt;
}

ExperimentConfig parse_config(const json& doc, const Overrides& overrides, std::optional<ExperimentKind> expected)
{
    check_keys(doc, "", {"experiment", "structure", "l", "n", "micro", "survival", "params", "gas", "output", "threads"});
    ExperimentConfig cfg;
    cfg.echo = doc;

    if (doc.contains("experiment")) {
        const auto name = get_string(doc["experiment"], "experiment");
        const auto kind = experiment_from_string(name);
        require(kind.has_value(), "experiment", "unknown experiment '" + name + "'");
        require(!expected || *expected == *kind, "experiment",
                "config names '" + name + "' but the subcommand runs '" + std::string(to_string(*expected)) + "'");
        cfg.experiment = *kind;
    } else {
        require(expected.has_value(), "experiment", "missing");
        cfg.experiment = *expected;
    }
    cfg.echo["experiment"] = std::string(to_string(cfg.experiment));

    int l = 1;
    if (doc.contains("l")) {
        l = static_cast<int>(get_int(doc["l"], "l"));
        require(l >= 1, "l", "need at least one non-numeraire commodity");
    }
    std::int64_t n = 1;
    if (doc.contains("n")) {
        n = get_int(doc["n"], "n");
        require(n >= 1, "n", "agent count must be positive");
    }

    std::string structure;
    if (doc.contains("structure")) {
        structure = get_string(doc["structure"], "structure");
        require(structure == "cobb_douglas" || structure == "survival" || structure == "custom-reference" ||
                    structure == "tabulated",
                "structure", "expected cobb_douglas, survival, custom-reference or tabulated");
        cfg.model = parse_model(doc, structure, l, n);
    } else {
        require(!doc.contains("micro"), "structure", "missing");
    }

    if (doc.contains("survival")) {
        const json& s = doc["survival"];
        check_keys(s, "survival", {"level"});
        require(s.contains("level"), "survival.level", "missing");
        cfg.survival_level = get_real(s["level"], "survival.level");
    }
    require(structure != "survival" || cfg.survival_level.has_value(), "survival.level",
            "the survival structure needs a subsistence level");

    if (doc.contains("params")) {
        cfg.params = parse_params(doc["params"], l);
    }

    if (doc.contains("gas")) {
        const json& g = doc["gas"];
        check_keys(g, "gas", {"m", "n", "betas", "radius", "points_per_axis"});
        GasSpec spec;
        if (g.contains("m")) {
            spec.m = get_real(g["m"], "gas.m");
        }
        if (g.contains("n")) {
            spec.n = get_int(g["n"], "gas.n");
        }
        try {
            validate_gas(spec);
        } catch (const Error& e) {
            throw ConfigError("gas", e.what());
        }
        require(g.contains("betas"), "gas.betas", "missing");
        cfg.gas_betas = get_reals(g["betas"], "gas.betas");
        require(!cfg.gas_betas.empty(), "gas.betas", "expected at least one inverse temperature");
        for (std::size_t i = 0; i < cfg.gas_betas.size(); ++i) {
            require(cfg.gas_betas[i] > 0.0, index("gas.betas", i), "inverse temperature must be positive");
        }
        if (g.contains("radius")) {
            cfg.gas_radius = get_real(g["radius"], "gas.radius");
            require(*cfg.gas_radius > 0.0, "gas.radius", "radius must be positive");
        }
        if (g.contains("points_per_axis")) {
            cfg.gas_points = static_cast<int>(get_int(g["points_per_axis"], "gas.points_per_axis"));
            require(*cfg.gas_points >= 2 && *cfg.gas_points <= 401, "gas.points_per_axis",
                    "expected between 2 and 401 points");
        }
        cfg.gas = spec;
    }

    if (doc.contains("output")) {
        const json& o = doc["output"];
        check_keys(o, "output", {"dir", "csv", "manifest"});
        if (o.contains("dir")) {
            cfg.output.dir = get_string(o["dir"], "output.dir");
        }
        if (o.contains("csv")) {
            cfg.output.csv = get_string(o["csv"], "output.csv");
        }
        if (o.contains("manifest")) {
            cfg.output.manifest = get_string(o["manifest"], "output.manifest");
        }
    }
    if (doc.contains("threads")) {
        cfg.threads = static_cast<int>(get_int(doc["threads"], "threads"));
        require(cfg.threads >= 0, "threads", "expected a non-negative worker count");
    }

    if (overrides.seed) {
        cfg.params.seed = *overrides.seed;
        cfg.echo["params"]["seed"] = *overrides.seed;
    }
    if (overrides.replicas) {
        cfg.params.replicas = *overrides.replicas;
        cfg.echo["params"]["replicas"] = *overrides.replicas;
    }
    if (overrides.out) {
        cfg.output.dir = *overrides.out;
        cfg.echo["output"]["dir"] = overrides.out->string();
    }
    if (overrides.threads) {
        cfg.threads = *overrides.threads;
        cfg.echo["threads"] = *overrides.threads;
    }
    const std::string name(to_string(cfg.experiment));
    if (cfg.output.csv.empty()) {
        cfg.output.csv = name + ".csv";
    }
    if (cfg.output.manifest.empty()) {
        cfg.output.manifest = name + ".manifest.json";
    }

    // Per-experiment requirements.
    const bool needs_model = cfg.experiment != ExperimentKind::GasFixtures;
    require(!needs_model || cfg.model.has_value(), "structure", "this experiment needs a model");
    switch (cfg.experiment) {
    case ExperimentKind::Equilibrium:
        for (std::size_t i = 0; i < cfg.params.configurations.size(); ++i) {
            require(cfg.params.configurations[i].size() == cfg.model->micro().support_points().size(),
                    index("params.configurations", i), "expected one count per atom");
        }
        break;
    case ExperimentKind::EntropySweep:
        require(l == 1, "l", "entropy sweeps run over p^1 and need l = 1");
        require(!cfg.params.grid.empty(), "params.grid", "missing");
        break;
    case ExperimentKind::TldVerify:
    case ExperimentKind::GcpVerify:
        require(cfg.params.price.has_value(), "params.price", "missing");
        require(!cfg.params.n_grid.empty(), "params.n_grid", "missing");
        break;
    case ExperimentKind::Survival:
        require(cfg.params.price.has_value(), "params.price", "missing");
        require(cfg.survival_level.has_value(), "survival.level", "missing");
        require(structure == "cobb_douglas" || structure == "survival", "structure",
                "non-survival needs Cobb-Douglas endowments");
        break;
    case ExperimentKind::CltCompare:
        require(l == 1, "l", "the CLT comparison runs on scalar models");
        require(!cfg.params.n_grid.empty(), "params.n_grid", "missing");
        break;
    case ExperimentKind::GasFixtures:
        require(cfg.gas.has_value(), "gas", "missing");
        break;
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides,
                             std::optional<ExperimentKind> expected)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("--config", "cannot open " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc, overrides, expected);
}

}  // namespace stochecon::cli
