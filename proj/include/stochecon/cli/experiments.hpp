#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochecon/cli/config.hpp"
#include "stochecon/cli/csv.hpp"
#include "stochecon/error.hpp"

namespace stochecon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kVersion = "0.1.0";

/// Library failure while running an experiment, tagged with the config
/// field that drove the failing step.
class RunError : public std::runtime_error {
public:
    RunError(std::string path, ErrorCode code, const std::string& what);
    const std::string& path() const noexcept { return path_; }
    ErrorCode code() const noexcept { return code_; }

private:
    std::string path_;
    ErrorCode code_;
};

struct ExperimentResult {
    CsvTable table;
    std::vector<std::string> warnings;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

nlohmann::json make_manifest(const ExperimentConfig& cfg, const ExperimentResult& result, double runtime_seconds);

struct RunRequest {
    std::filesystem::path config;
    Overrides overrides;
    std::optional<ExperimentKind> experiment;  // nullopt: take it from the file
    bool validate_only = false;
    bool quiet = false;
};

/// Loads, validates, runs and writes the CSV and manifest. Returns the
/// process exit status; diagnostics go to `err`, progress to `out`.
int run(const RunRequest& request, std::ostream& out, std::ostream& err);

}  // namespace stochecon::cli
