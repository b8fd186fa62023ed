#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopside/catalog.hpp"
#include "stopside/oracle.hpp"
#include "stopside/smoothfit.hpp"
#include "stopside/solver.hpp"

namespace stopside {

/// Configuration error tied to a location in the config document.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(ErrorKind::ConfigError, field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class Method { Threshold, Sufficient };

struct RewardConfig {
    std::string type;   ///< call | shifted_call | exponential | expression
    double parameter = 0.0;
    std::string expression;
    double sample_lo = -10.0;
    double sample_hi = 10.0;
};

struct OracleConfig {
    std::optional<double> grid_lo;
    std::optional<double> grid_hi;
    int grid_n = 4000;
    double chain_h = 0.005;
    long long mc_paths = 0;
    std::uint64_t seed = 1;
    std::optional<double> mc_x0;
};

struct SampleConfig {
    std::optional<double> lo;
    std::optional<double> hi;
    int n = 201;
};

struct ProblemConfig {
    std::string diffusion;
    ParamMap params;
    RewardConfig reward;
    double alpha = 0.0;
    ProblemSide side = ProblemSide::Right;
    std::optional<double> rrc_point;
    SolveOptions solve;
    Method method = Method::Threshold;
    double smooth_fit_tol = 1e-6;
    std::optional<OracleConfig> oracle;
    SampleConfig samples;

    Problem build() const;
    nlohmann::json to_json() const;
};

/// Validates against the schema; unknown keys are rejected with their path.
ProblemConfig parse_config(const nlohmann::json& j);
ProblemConfig load_config(const std::string& path);

struct ConditionRecord {
    bool holds = false;
    std::string relation;
    double value = 0.0;
    std::string detail;
};

struct SmoothFitRecord {
    std::string sf;
    std::string ssf;
    bool dv_dpsi_exists = false;
    bool dv_phi_ds_exists = false;
    double dv_dx_left = 0.0;
    double dv_dx_right = 0.0;
    double dv_ds_left = 0.0;
    double dv_ds_right = 0.0;
    double dv_dpsi_left = 0.0;
    double dv_dpsi_right = 0.0;
    double dv_phi_ds_left = 0.0;
    double dv_phi_ds_right = 0.0;
    double tol = 0.0;
    std::vector<std::string> predicted_by;
    std::vector<std::string> notes;
};

struct TableRecord {
    std::string x_star_sign;
    std::string threshold;
    std::string atom_bound;
    bool sf_and_ssf = false;
    bool dv_dpsi_exists = false;
    bool dv_phi_ds_exists = false;
};

struct ValueSample {
    double x = 0.0;
    double g = 0.0;
    double v = 0.0;
    double psi_scaled = 0.0;
};

struct McRecord {
    double x0 = 0.0;
    double z = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    double expected = 0.0;
    long long n_paths = 0;
    std::uint64_t seed = 0;
    bool agrees = false;
};

struct OracleRecord {
    double grid_lo = 0.0;
    double grid_hi = 0.0;
    int grid_n = 0;
    double ratio_argmax = 0.0;
    double ratio_cell = 0.0;
    bool ratio_agrees = false;
    double chain_far_end = 0.0;   ///< end of the chain window on the continuation side
    double chain_h = 0.0;
    std::size_t chain_nodes = 0;
    double chain_frontier = 0.0;
    double chain_cell = 0.0;
    bool chain_agrees = false;
    std::optional<McRecord> mc;
};

struct SolveReport {
    int schema_version = 1;
    nlohmann::json problem;
    std::string side;
    std::string method;
    std::string status;
    double x_star = 0.0;
    double k = 0.0;
    double rrc_point = 0.0;
    double residual = 0.0;
    double speed_atom = 0.0;
    std::vector<double> other_roots;
    std::vector<std::string> diagnostics;
    std::map<std::string, ConditionRecord> conditions;
    bool rrc_integrability_ok = false;
    bool rrc_limit_ok = false;
    double rrc_limit_estimate = 0.0;
    std::string rrc_details;
    double rep_atom_point = 0.0;
    double rep_atom_weight = 0.0;
    std::string rep_density;
    std::optional<SmoothFitRecord> smooth_fit;
    std::optional<TableRecord> table_row;
    std::vector<ValueSample> value_samples;
    std::optional<OracleRecord> oracle;
    std::map<std::string, double> timings_ms;
};

nlohmann::json to_json(const SolveReport& r);
SolveReport report_from_json(const nlohmann::json& j);

/// Solves (and diagnoses when Verified) the configured problem.
SolveReport build_report(const ProblemConfig& cfg, bool with_oracle);

/// Ratio, chain and (when mc_paths > 0) Monte Carlo checks of a solution.
OracleRecord run_oracles(const Problem& p, const Solution& sol, const OracleConfig& cfg);

struct SweepOptions {
    std::string parameter = "alpha";
    double lo = 0.0;
    double hi = 0.0;
    int n = 20;
    double target_x = 0.0;
    double bisect_tol = 1e-9;
};

struct SweepRow {
    double param = 0.0;
    bool ok = false;
    double x_star = 0.0;
    double k = 0.0;
    std::string sf;
    std::string ssf;
    std::string status;
    std::string error;
};

struct SweepTransition {
    std::string quantity;    ///< x_star_at_target | k_positive
    std::string direction;   ///< onset (false -> true) or exit (true -> false) as the parameter grows
    double at = 0.0;
};

struct SweepResult {
    std::string parameter;
    std::vector<SweepRow> rows;
    std::vector<SweepTransition> transitions;
};

SweepResult run_sweep(const ProblemConfig& cfg, const SweepOptions& opts);
nlohmann::json to_json(const SweepResult& r);

struct CliOptions {
    std::string config_path;
    std::optional<std::string> out_path;
    std::optional<std::string> csv_path;
    std::optional<std::string> method;
    std::optional<std::string> side;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

/// Exit codes: 0 Verified, 2 NotOneSided/Unverified, 3 input error, 4 numeric failure.
int cmd_solve(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliOptions& opts, const SweepOptions& sweep, std::ostream& out, std::ostream& err);
int cmd_catalog(std::ostream& out);
int cmd_oracle(const CliOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace stopside
