#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "loopaction/minimizer.hpp"
#include "loopaction/verify.hpp"

namespace loopaction {

enum class ProblemKind { TwoBody, ThreeBody };

std::string_view to_string(ProblemKind kind);

/// Everything a run, sweep or report needs. Built from defaults, then a
/// key=value config file, then command-line overrides.
struct RunConfig {
    ProblemKind problem = ProblemKind::TwoBody;
    double a = 1.0;
    double h = -0.5;
    std::array<double, 3> masses{1.0, 1.0, 1.0};
    double E = -0.5;
    int modes = 16;
    int grid = 512;
    std::vector<std::uint64_t> seeds{1};
    /// deg u (two bodies) or every relative winding (three bodies).
    int winding = 1;
    /// Amplitude bound of the random start perturbation.
    double noise = 0.3;
    /// Oracle orbit eccentricity.
    double eccentricity = 0.0;
    MinimizeOptions minimize;
    std::filesystem::path out_dir = "out";
    bool emit_plots = false;
    /// Energies to sweep over (h or E by problem kind); empty means the single configured energy.
    std::vector<double> sweep;
    /// Concurrent runs in a sweep; 0 picks the hardware concurrency.
    int jobs = 0;

    /// The energy of the selected problem.
    double energy() const { return problem == ProblemKind::TwoBody ? h : E; }

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// Applies one setting. Keys match the long command-line flags with '-'
/// replaced by '_': problem, a, h, m1, m2, m3, E, modes, grid, seeds, winding,
/// noise, e, out, plots, max_iters, tol, sweep, jobs. Throws ConfigError.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Parses flat "key = value" lines; '#' starts a comment.
void apply_config_text(RunConfig& config, std::string_view text);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// One row of a formula-adjudication table.
struct FormulaRow {
    /// "action" or "period"
    std::string quantity;
    std::string label;
    /// The closed form or procedure that produced the value.
    std::string source;
    double value = 0.0;
    /// Label of the row every gap is measured against.
    std::string reference;
    /// (value - reference value) / reference value
    double rel_gap = 0.0;
    /// Set on the candidate rows that agree with the reference within 1e-4.
    bool matches_reference = false;
};

/// Summary of one minimizer run and everything checked about it.
struct OutputRecord {
    std::string run_id;
    RunConfig config;
    double energy = 0.0;
    std::uint64_t seed = 0;
    MinimizeStatus status = MinimizeStatus::MaxIters;
    double action = 0.0;
    double period = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    double min_separation = 0.0;
    std::vector<int> windings;
    int grid_size = 0;
    double factor_kinetic = 0.0;
    double factor_potential = 0.0;
    std::vector<double> action_history;
    /// Final loop per body (a single relative loop for two bodies).
    std::vector<FourierLoop> final_loops;
    std::vector<FormulaRow> comparisons;
    std::vector<CheckReport> checks;
    /// Orbit over one period for plotting, positions[sample][body].
    PhysicalOrbit orbit;

    int checks_passed() const;
};

/// Fixed column order of summary.csv.
inline constexpr std::array<std::string_view, 13> kSummaryColumns{
    "run_id",     "problem",        "energy",        "seed",         "status", "action", "period",
    "gradient_norm", "iterations", "min_separation", "checks_passed", "checks_total", "grid"};

/// Minimizes from the random start for `seed` at `energy` and runs the checks.
/// Throws ConfigError for invalid settings and the library errors of a failed run.
OutputRecord execute_run(const RunConfig& config, double energy, std::uint64_t seed, std::string run_id);

/// All runs of the config (sweep energies x seeds), concurrently, in config order.
std::vector<OutputRecord> execute_runs(const RunConfig& config);

/// 12-significant-digit formatting used by every CSV cell.
std::string format_number(double value);

std::string summary_csv(const std::vector<OutputRecord>& records);
std::string record_json(const OutputRecord& record);
std::string orbit_svg(const PhysicalOrbit& orbit, std::string_view title);
std::string convergence_svg(const std::vector<double>& action_history, std::string_view title);

/// Writes run_<id>.json per record, summary.csv and optional plots. Throws IoError.
void write_outputs(const std::vector<OutputRecord>& records, const RunConfig& config);

/// Closed-form candidates, oracle quadrature and the minimizer for one system.
std::vector<FormulaRow> formula_table(const RunConfig& config);

std::string formulas_csv(const std::vector<FormulaRow>& rows);
std::string formulas_json(const std::vector<FormulaRow>& rows);
/// Writes formulas.csv and formulas.json. Throws IoError.
void write_formulas(const std::vector<FormulaRow>& rows, const RunConfig& config);

/// Oracle-side checks of the configured system (Kepler or Lagrange loops).
std::vector<CheckReport> verification_suite(const RunConfig& config);

std::string checks_csv(const std::vector<CheckReport>& checks);
std::string checks_json(const std::vector<CheckReport>& checks);
/// Writes verify.csv and verify.json. Throws IoError.
void write_checks(const std::vector<CheckReport>& checks, const RunConfig& config);

/// Oracle orbit of the configured system at config.eccentricity.
PhysicalOrbit oracle_orbit(const RunConfig& config);
std::string orbit_csv(const PhysicalOrbit& orbit);
/// Writes oracle_orbit.csv, oracle.json and optionally plots/oracle_orbit.svg. Throws IoError.
void write_oracle(const PhysicalOrbit& orbit, const RunConfig& config);

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Executes and writes all runs; returns the exit code. Errors are reported on `log`.
int run(const RunConfig& config, std::ostream& log);

}  // namespace loopaction
