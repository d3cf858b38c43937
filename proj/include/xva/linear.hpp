#pragma once

#include "xva/grid.hpp"
#include "xva/model.hpp"

namespace xva {

/// Quadrature settings for the linear (M = V) solution formula.
struct LinearNumerics {
    /// Truncation half-width of the source convolution in log-price. A
    /// non-positive value selects the smallest width whose tail bound is
    /// below `truncation_target`.
    double truncation = 0.0;
    double truncation_target = 1e-12;
    int order = 32;
    int space_panels = 2;
    int time_panels = 1;

    void validate() const;
};

/// Adjusted price u(tau, x) of the linear problem: discounted payoff
/// convolution plus the Duhamel integral of f(V) with discount r + lambda_B + lambda_C.
double linear_adjusted_price(const Contract& contract, const MarketParams& p, double tau, double x,
                             const LinearNumerics& num = {});

/// Linear-model price of a contract with non-negative payoff, given its
/// risk-free value V. Requires lambda_B + lambda_C > 0.
double nonneg_linear_closed_form(const MarketParams& p, double tau, double V);

/// Semilinear-model (M = U) price of a contract with non-negative payoff:
/// e^{-((1-R_C) lambda_C + s_F) tau} V.
double nonneg_nonlinear_closed_form(const MarketParams& p, double tau, double V);

/// Truncation half-width used by linear_adjusted_price at (tau, x).
double linear_truncation_width(const Contract& contract, const MarketParams& p, double tau, double x,
                               const LinearNumerics& num);

Surface linear_surface(const Contract& contract, const MarketParams& p, const GridSpec& grid,
                       const LinearNumerics& num = {});

}  // namespace xva
