#pragma once

#include "xva/convolution.hpp"
#include "xva/grid.hpp"
#include "xva/model.hpp"
#include "xva/truncation.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace xva {

/// Closed-form starting iterate +-C e^{lambda tau + a x}.
///
/// The subsolution is -C e^{lambda tau} (a = 0) with C = 0, K or K_s - K_t;
/// the supersolution is e^{lambda tau + x}. Both come with their exact
/// residual D so the sign conditions can be checked without differencing.
struct InitialSolution {
    double sign = 1.0;
    double coefficient = 1.0;
    double lambda = 0.0;
    double a = 0.0;

    double value(double tau, double x) const;
    /// D(u) = u_tau - sigma^2/2 u_xx - rho u_x + (r + c_M) u - g(u).
    double residual(const MarketParams& p, double tau, double x) const;
    Surface sample(const GridSpec& grid, InterpOrder order) const;
};

/// Smallest admissible exponents of the starting iterates.
double supersolution_lambda_min(const MarketParams& p);
double subsolution_lambda_min(const MarketParams& p);

InitialSolution initial_supersolution(const Contract& contract, const MarketParams& p,
                                      std::optional<double> lambda_over = std::nullopt);
InitialSolution initial_subsolution(const Contract& contract, const MarketParams& p,
                                    std::optional<double> lambda_under = std::nullopt);

enum class ExecutionMode { Serial, Parallel };

/// Piecewise-linear for the kinked/discontinuous payoffs, cubic for the forward.
InterpOrder default_interp_order(ContractKind kind);

struct IterationConfig {
    GridSpec grid;  ///< output grid
    int iterations = 5;
    double epsilon = 10.0;
    int space_order = 32;
    int space_panels = 2;
    int time_order = 32;
    int time_panels = 1;
    double kernel_cutoff = 7.0;
    double alpha = 1.0;
    std::optional<InterpOrder> interp_order;
    bool track_both = true;
    std::optional<double> lambda_under;
    std::optional<double> lambda_over;
    ExecutionMode mode = ExecutionMode::Parallel;

    void validate(const Contract& contract) const;
    InterpOrder order_for(const Contract& contract) const;
    DuhamelQuadrature quadrature() const;
};

/// Table-1 style output grid: tau in [0, T] and log-price covering
/// [ln S_min, ln S_max] with the given steps.
GridSpec output_grid(double T, double d_tau, double S_min, double S_max, double d_x);

/// `kinks` plus the points where the previous iterate changes sign on its
/// (tau-interpolated) slice at time s; g has a kink there.
BreakList source_breaks(const Surface& prev, double s, const BreakList& kinks);

/// Duhamel source of one iteration step, serial reference route: each
/// quadrature point goes through Surface::eval.
std::vector<double> step_source_reference(const Surface& prev, const MarketParams& p, const DuhamelTerm& term,
                                          const DuhamelQuadrature& q, const GridSpec& out, const BreakList& kinks);

/// Same quantity computed by the OpenMP kernel with precomputed time
/// slices and quadrature nodes. Node results do not depend on the thread
/// count.
std::vector<double> step_source_parallel(const Surface& prev, const MarketParams& p, const DuhamelTerm& term,
                                         const DuhamelQuadrature& q, const GridSpec& out, const BreakList& kinks);

/// One (relaxed) monotone step u_{n+1} = alpha F(u_n) + (1 - alpha) u_n on
/// `out`, with the tau = 0 row set to the payoff. `prev` must cover `out`
/// widened by epsilon (and the drift), otherwise NumericalError names the
/// offending point.
Surface iterate_step(const Surface& prev, const Contract& contract, const MarketParams& p,
                     const IterationConfig& cfg, const GridSpec& out);

/// Residual D(u) on the interior nodes of u (two nodes in from every edge
/// of the grid), using fourth-order central differences of node values.
Surface residual(const Surface& u, const MarketParams& p);

struct IterationDiagnostics {
    int n = 0;
    std::optional<double> gap_sup_norm;
    double max_ordering_violation = 0.0;
    std::size_t ordering_violations = 0;
    std::optional<double> residual_sup_norm_sub;
    std::optional<double> residual_sup_norm_super;
    std::optional<double> residual_sup_norm;
    std::optional<double> step_change_sub;
    std::optional<double> step_change_super;
};

struct MonotoneResult {
    std::vector<Surface> sub_surfaces;    ///< n = 0..N on the output grid
    std::vector<Surface> super_surfaces;  ///< empty unless track_both
    std::vector<Surface> residual_sub;
    std::vector<Surface> residual_super;
    std::vector<IterationDiagnostics> diagnostics;
    DomainSchedule schedule;
    /// Tail bound of the truncated source integral at the output domain edges, tau = T.
    double truncation_bound = 0.0;
    double max_ordering_violation = 0.0;
    std::size_t ordering_violations = 0;

    const Surface& final_sub() const { return sub_surfaces.back(); }
    const Surface& final_super() const { return super_surfaces.back(); }
};

/// Relative tolerance of the ordering checks: lhs <= rhs + tol (1 + |rhs|).
inline constexpr double kOrderingTolerance = 1e-6;

MonotoneResult run_monotone(const Contract& contract, const MarketParams& p, const IterationConfig& cfg);

/// sup |a - b| over common nodes; both surfaces must share a grid.
double sup_distance(const Surface& a, const Surface& b);
double sup_norm(const Surface& a);

}  // namespace xva
