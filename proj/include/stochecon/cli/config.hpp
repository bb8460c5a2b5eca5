#pragma once

// Experiment configuration: a single JSON document, validated up front.
// See configs/schema.json for the documented layout.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochecon/thermo.hpp"
#include "stochecon/types.hpp"

namespace stochecon::cli {

/// Validation failure tied to a dotted field path such as `micro.weights`.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

enum class ExperimentKind { Equilibrium, EntropySweep, TldVerify, GcpVerify, Survival, CltCompare, GasFixtures };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_from_string(std::string_view name);

struct Params {
    std::optional<Price> price;
    double delta = 0.05;
    std::uint64_t replicas = 10000;
    std::uint64_t naive_replicas = 0;  // 0: same as replicas
    std::uint64_t seed = 1;
    std::vector<double> grid;          // p^1 values (l = 1)
    std::vector<std::int64_t> n_grid;
    std::vector<double> displacements;
    std::string method = "auto";       // auto | oracle | importance | naive
    std::vector<std::vector<double>> configurations;  // atom counts
};

struct OutputSpec {
    std::filesystem::path dir = ".";
    std::string csv;       // default: <experiment>.csv
    std::string manifest;  // default: <experiment>.manifest.json
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Equilibrium;
    std::optional<EconomyModel> model;
    std::optional<double> survival_level;
    std::optional<GasSpec> gas;
    std::vector<double> gas_betas;
    std::optional<double> gas_radius;
    std::optional<int> gas_points;
    Params params;
    OutputSpec output;
    int threads = 0;
    nlohmann::json echo;  // config as run, overrides applied
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replicas;
    std::optional<std::filesystem::path> out;
    std::optional<int> threads;
};

/// Parses and validates; `expected` pins the experiment when given by a
/// subcommand. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides,
                              std::optional<ExperimentKind> expected = std::nullopt);

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides,
                             std::optional<ExperimentKind> expected = std::nullopt);

}  // namespace stochecon::cli
