#include "xva/linear.hpp"

#include "xva/convolution.hpp"
#include "xva/errors.hpp"
#include "xva/special_math.hpp"
#include "xva/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>
#include <sstream>

namespace xva {

namespace {

double total_default_rate(const MarketParams& p)
{
    return p.lambda_b + p.lambda_c;
}

/// |f(V(s, e^y))| <= k (e^{(carry - r) s} e^y + K e^{-r s}) with k the
/// larger coefficient of f.
SourceEnvelope linear_source_envelope(const Contract& contract, const MarketParams& p)
{
    const double k = std::max(std::abs(p.lambda_b + p.recovery_c * p.lambda_c - p.funding_spread),
                              p.recovery_b * p.lambda_b + p.lambda_c);
    SourceEnvelope e;
    e.c_plus = k;
    e.lambda_plus = p.carry() - p.r;
    e.a = 1.0;
    e.c_minus = contract.kind == ContractKind::Call ? 0.0 : k * contract.paid_strike();
    e.lambda_minus = -p.r;
    return e;
}

/// y-locations where f(V(s, e^y)) is not smooth (sign changes of V) or
/// where V is close to the payoff jump.
BreakList risk_free_breaks(const Contract& contract, const MarketParams& p, double s)
{
    BreakList b;
    switch (contract.kind) {
    case ContractKind::Call:
        b.add(std::log(contract.strike) - p.rho() * s);
        break;
    case ContractKind::Forward:
        b.add(std::log(contract.strike) - p.carry() * s);
        break;
    case ContractKind::Gap: {
        // Near expiry V has a layer of width sigma sqrt(s) around the trigger;
        // graded breaks keep it inside short panels.
        const double centre = std::log(contract.trigger) - p.rho() * s;
        b.add(centre);
        if (s > 0.0) {
            const double width = p.sigma * std::sqrt(s);
            for (double k : {1.0, 3.0, 8.0}) {
                b.add(centre - k * width);
                b.add(centre + k * width);
            }
        }
        auto v = [&](double y) { return risk_free_price(contract, p, s, std::exp(y)); };
        double lo = std::log(contract.trigger) - 5.0;
        double hi = std::log(contract.strike) + 5.0;
        // V underflows to 0 far below the trigger; that side counts as negative.
        if (v(lo) <= 0.0 && v(hi) > 0.0) {
            for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (v(mid) > 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            b.add(0.5 * (lo + hi));
        }
        break;
    }
    }
    return b;
}

}  // namespace

void LinearNumerics::validate() const
{
    if (order < 2)
        throw ValidationError("linear quadrature order must be at least 2");
    if (space_panels < 1 || time_panels < 1)
        throw ValidationError("linear quadrature panel counts must be positive");
    if (truncation <= 0.0 && !(truncation_target > 0.0))
        throw ValidationError("automatic truncation needs a positive target");
}

double linear_truncation_width(const Contract& contract, const MarketParams& p, double tau, double x,
                               const LinearNumerics& num)
{
    if (num.truncation > 0.0)
        return num.truncation;
    if (!(tau > 0.0))
        return 1.0;
    const SourceEnvelope env = linear_source_envelope(contract, p);
    const double discount = p.r + total_default_rate(p);
    const QuadratureRule rule = gauss_legendre(16);
    auto bound = [&](double L) { return source_tail_bound(p.sigma, p.rho(), discount, env, x - L, x + L, x, tau, rule); };

    double hi = 1.0;
    while (bound(hi) > num.truncation_target && hi < 256.0)
        hi *= 2.0;
    double lo = hi / 2.0;
    if (bound(lo) <= num.truncation_target)
        return lo;
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (bound(mid) > num.truncation_target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

double linear_adjusted_price(const Contract& contract, const MarketParams& p, double tau, double x,
                             const LinearNumerics& num)
{
    p.validate();
    contract.validate();
    num.validate();
    if (!(tau >= 0.0) || tau > contract.maturity * (1.0 + 1e-12))
        throw ValidationError("linear_adjusted_price requires 0 <= tau <= T");
    if (tau == 0.0)
        return transformed_payoff(contract, x);

    const double discount = p.r + total_default_rate(p);
    const double homogeneous = std::exp(-discount * tau) * payoff_integral(contract, p, tau, x);

    const DuhamelQuadrature q = DuhamelQuadrature::make(num.order, num.time_panels, num.order, num.space_panels);
    const DuhamelTerm term{p.sigma, p.rho(), discount, linear_truncation_width(contract, p, tau, x, num)};

    auto source = [&](double s, double y) {
        const double value = inhomogeneity_f(p, risk_free_price(contract, p, s, std::exp(y)));
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "non-finite linear source at (s=" << s << ", y=" << y << ")";
            throw NumericalError(msg.str());
        }
        return value;
    };
    auto breaks = [&](double s) { return risk_free_breaks(contract, p, s); };
    return homogeneous + duhamel_integral(term, q, tau, x, source, breaks);
}

double nonneg_linear_closed_form(const MarketParams& p, double tau, double V)
{
    const double total = total_default_rate(p);
    if (!(total > 0.0))
        throw ValidationError("nonneg_linear_closed_form requires lambda_B + lambda_C > 0");
    if (V < 0.0)
        throw ValidationError("nonneg_linear_closed_form requires V >= 0");
    if (tau == 0.0)
        return V;
    const double coeff = (p.counterparty_loss_rate() * std::exp(-total * tau) + p.lambda_b
                          + p.recovery_c * p.lambda_c - p.funding_spread)
                         / total;
    return coeff * V;
}

double nonneg_nonlinear_closed_form(const MarketParams& p, double tau, double V)
{
    if (V < 0.0)
        throw ValidationError("nonneg_nonlinear_closed_form requires V >= 0");
    return std::exp(-p.counterparty_loss_rate() * tau) * V;
}

Surface linear_surface(const Contract& contract, const MarketParams& p, const GridSpec& grid,
                       const LinearNumerics& num)
{
    grid.validate();
    const std::size_t nt = grid.tau_count();
    const std::size_t nx = grid.x_count();
    std::vector<double> values(nt * nx);
    const long long total = static_cast<long long>(nt * nx);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
    for (long long idx = 0; idx < total; ++idx) {
        const std::size_t i = static_cast<std::size_t>(idx) / nx;
        const std::size_t j = static_cast<std::size_t>(idx) % nx;
        try {
            values[static_cast<std::size_t>(idx)] = linear_adjusted_price(contract, p, grid.tau(i), grid.x(j), num);
        } catch (...) {
#pragma omp critical(xva_linear_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return Surface(grid, std::move(values), InterpOrder::Linear);
}

}  // namespace xva
