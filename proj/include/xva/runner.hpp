#pragma once

#include "xva/linear.hpp"
#include "xva/model.hpp"
#include "xva/monotone.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xva {

enum class RunMode { RiskFree, Linear, NonnegClosed, Monotone };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

/// Fully resolved run description. `from_json` fills everything the
/// document leaves out with the reference defaults; `to_json` writes the
/// resolved form, which reproduces the run when fed back in.
struct RunConfig {
    RunMode mode = RunMode::Monotone;
    Contract contract = Contract::call(15.0, 2.0);
    MarketParams market = reference_market();

    double d_tau = 0.02;
    double d_x = 0.02;
    std::optional<double> s_min;  ///< default: strike - 5 (gap: trigger - 5)
    std::optional<double> s_max;  ///< default: strike + 5

    int iterations = 5;
    double epsilon = 10.0;
    double alpha = 1.0;
    int space_order = 32;
    int space_panels = 2;
    int time_order = 32;
    int time_panels = 1;
    double kernel_cutoff = 7.0;
    std::optional<InterpOrder> interp_order;
    bool track_both = true;
    ExecutionMode execution = ExecutionMode::Parallel;
    double linear_truncation_target = 1e-12;

    std::string out_dir = "xva_out";
    bool write_csv = true;
    bool write_json = true;
    bool all_iterations = false;
    bool verify = false;

    /// Fills S range defaults that depend on the contract.
    void resolve();
    void validate() const;

    GridSpec grid() const;
    IterationConfig iteration_config() const;
    LinearNumerics linear_numerics() const;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);

struct FlagOverrides {
    std::optional<std::string> mode;
    std::optional<std::string> contract;
    std::optional<int> iterations;
    std::optional<double> alpha;
    std::optional<double> epsilon;
    std::optional<std::string> out;
    bool verify = false;
    bool all_iterations = false;
};

/// Applies flags on top of the file values; flags win.
void apply_overrides(RunConfig& cfg, const FlagOverrides& flags);

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr double kVerifyOracleTolerance = 1e-3;
inline constexpr double kVerifyGapTolerance = 1e-2;
inline constexpr double kVerifyTruncationTolerance = 1e-6;

struct VerifyReport {
    bool pass = true;
    std::optional<double> oracle_gap;  ///< relative sup-norm error against the closed form (call)
    std::optional<double> gap_sup_norm;
    double max_ordering_violation = 0.0;
    std::size_t ordering_violations = 0;
    double truncation_bound = 0.0;
    std::vector<std::string> lines;
};

VerifyReport verify_result(const RunConfig& cfg, const MonotoneResult& res);

/// Executes a resolved configuration and writes its artifacts. Returns the
/// process exit status; errors are reported as one line on `err`.
int run(RunConfig cfg, std::ostream& out, std::ostream& err);

/// Command-line entry point: parses flags, loads the config and runs.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xva
