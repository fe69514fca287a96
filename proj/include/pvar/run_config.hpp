#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvar/models.hpp"
#include "pvar/phase_space.hpp"
#include "pvar/variational.hpp"

namespace pvar {

/// Config schema violation; `path` points at the offending field ("solver.budget").
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

/// Problem size exceeds a configured cap (oracle Hilbert dimension).
class CapacityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCapacity = 3;
inline constexpr int kExitNumerical = 4;

struct OracleConfig {
    std::vector<int> cutoffs;
    long dimension_cap = 4096;
    bool strict = false;
};

struct SweepConfig {
    std::string parameter = "p";
    std::vector<double> values;
    bool warm_start = true;
};

struct PhaseSpaceConfig {
    GridSpec grid;
    int truncation = -1;     // -1 = default (capped at 16)
    double sigma_reg = -1;   // -1 = default_sigma of the state
    std::string label = "state";
};

struct RunConfig {
    nlohmann::json raw;
    std::string hash;  // FNV-1a of the canonical JSON dump

    std::string model_type;  // "jc" | "rydberg" | "custom"
    JcParams jc;
    RydbergParams rydberg;
    bool polariton_basis = false;  // rydberg only: solve in the polariton frame
    ModelSpec custom_model;

    Ansatz ansatz;              // base ansatz (defaults to vacuum (x) ground)
    bool ansatz_given = false;
    int correlation_order = 0;  // 0 = product ansatz; 2 = free order-2 cross deltas

    MinimizeOptions solver;
    OracleConfig oracle;
    SweepConfig sweep;
    PhaseSpaceConfig phase_space;

    std::string out_dir;  // may be empty; resolved against --out / PVAR_OUT_DIR
};

std::string config_hash(const nlohmann::json& j);

/// Parses and schema-validates; rejects unknown fields with their path.
RunConfig load_config(const nlohmann::json& j);
RunConfig load_config_file(const std::filesystem::path& path);

/// Model at the configured parameters; `drive` overrides the drive amplitude p.
ModelSpec build_model(const RunConfig& config);
ModelSpec build_model(const RunConfig& config, double drive);

/// Ansatz family: the configured base (padded to the model's size) with every
/// parameter free, plus order-2 correlation slots when enabled.
AnsatzTemplate build_template(const RunConfig& config, const ModelSpec& model);

/// Full command-line entry point; returns the process exit code.
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pvar
