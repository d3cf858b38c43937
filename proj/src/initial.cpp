#include "xva/errors.hpp"
#include "xva/monotone.hpp"

#include <cmath>

namespace xva {

double InitialSolution::value(double tau, double x) const
{
    if (coefficient == 0.0)
        return 0.0;
    return sign * coefficient * std::exp(lambda * tau + a * x);
}

double InitialSolution::residual(const MarketParams& p, double tau, double x) const
{
    const double u = value(tau, x);
    const double half_var = 0.5 * p.sigma * p.sigma;
    return (lambda - half_var * a * a - p.rho() * a + p.r + p.c_m()) * u - reaction_g(p, u);
}

Surface InitialSolution::sample(const GridSpec& grid, InterpOrder order) const
{
    return Surface::sample(grid, [this](double tau, double x) { return value(tau, x); }, order);
}

double supersolution_lambda_min(const MarketParams& p)
{
    return 0.5 * p.sigma * p.sigma + p.rho() - p.r - p.counterparty_loss_rate();
}

double subsolution_lambda_min(const MarketParams& p)
{
    return -p.r + p.issuer_loss_rate();
}

InitialSolution initial_supersolution(const Contract& contract, const MarketParams& p, std::optional<double> lambda_over)
{
    p.validate();
    contract.validate();
    const double lambda = lambda_over.value_or(supersolution_lambda_min(p));
    if (!std::isfinite(lambda) || lambda < supersolution_lambda_min(p))
        throw ValidationError("supersolution exponent below sigma^2/2 + rho - r - (1-R_C) lambda_C - s_F");
    return InitialSolution{1.0, 1.0, lambda, 1.0};
}

InitialSolution initial_subsolution(const Contract& contract, const MarketParams& p, std::optional<double> lambda_under)
{
    p.validate();
    contract.validate();
    const double lambda = lambda_under.value_or(subsolution_lambda_min(p));
    if (!std::isfinite(lambda) || lambda < subsolution_lambda_min(p))
        throw ValidationError("subsolution exponent below -r + (1-R_B) lambda_B");
    double c = 0.0;
    switch (contract.kind) {
    case ContractKind::Call: c = 0.0; break;
    case ContractKind::Forward: c = contract.strike; break;
    case ContractKind::Gap: c = contract.strike - contract.trigger; break;
    }
    return InitialSolution{-1.0, c, lambda, 0.0};
}

InterpOrder default_interp_order(ContractKind kind)
{
    return kind == ContractKind::Forward ? InterpOrder::Cubic : InterpOrder::Linear;
}

}  // namespace xva
