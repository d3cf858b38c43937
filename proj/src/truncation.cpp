#include "xva/truncation.hpp"

#include "xva/convolution.hpp"
#include "xva/errors.hpp"

#include <cmath>

namespace xva {

void Envelope::validate(const MarketParams& p) const
{
    if (!(c_under >= 0.0))
        throw ValidationError("envelope requires C_under >= 0");
    if (!(c_over > 0.0))
        throw ValidationError("envelope requires C_over > 0");
    const double over_min = 0.5 * p.sigma * p.sigma + p.rho() - p.r - p.counterparty_loss_rate();
    const double under_min = -p.r + p.issuer_loss_rate();
    if (lambda_over < over_min)
        throw ValidationError("envelope lambda_over below its admissible minimum");
    if (lambda_under < under_min)
        throw ValidationError("envelope lambda_under below its admissible minimum");
}

Envelope default_envelope(const Contract& contract, const MarketParams& p)
{
    Envelope e;
    e.c_over = 1.0;
    e.a = 1.0;
    e.lambda_over = 0.5 * p.sigma * p.sigma + p.rho() - p.r - p.counterparty_loss_rate();
    e.lambda_under = -p.r + p.issuer_loss_rate();
    switch (contract.kind) {
    case ContractKind::Call: e.c_under = 0.0; break;
    case ContractKind::Forward: e.c_under = contract.strike; break;
    case ContractKind::Gap: e.c_under = contract.strike - contract.trigger; break;
    }
    return e;
}

SourceEnvelope reaction_envelope(const MarketParams& p, const Envelope& env)
{
    SourceEnvelope s;
    s.c_plus = env.c_over * (p.c_m() - p.counterparty_loss_rate());
    s.lambda_plus = env.lambda_over;
    s.a = env.a;
    s.c_minus = env.c_under * (p.c_m() - p.issuer_loss_rate());
    s.lambda_minus = env.lambda_under;
    return s;
}

double source_tail_bound(double sigma, double rho, double discount, const SourceEnvelope& src, double z_lo,
                         double z_hi, double x, double tau, const QuadratureRule& time_rule, int time_panels)
{
    if (!(tau > 0.0))
        return 0.0;
    const double a = src.a;
    const double var_rate = sigma * sigma;
    // Exponent of the growing part after completing the square in z.
    const double k_plus = discount - a * rho - 0.5 * a * a * var_rate;
    const double right = z_hi - x;
    const double left = x - z_lo;

    auto integrand = [&](double w) {
        // s = tau - w^2, ds = 2 w dw
        const double elapsed = w * w;
        const double s = tau - elapsed;
        const double spread = std::sqrt(2.0 * var_rate * elapsed);
        const double shift = var_rate * elapsed * a;
        double v = 0.0;
        if (src.c_plus != 0.0) {
            const double tails = erfc((right - shift) / spread) + erfc((left + shift) / spread);
            v += 0.5 * src.c_plus * std::exp(-k_plus * tau + a * x + (src.lambda_plus + k_plus) * s) * tails;
        }
        if (src.c_minus != 0.0) {
            const double tails = erfc(right / spread) + erfc(left / spread);
            v += 0.5 * src.c_minus * std::exp(-discount * tau + (src.lambda_minus + discount) * s) * tails;
        }
        return 2.0 * w * v;
    };
    return integrate_composite(integrand, 0.0, std::sqrt(tau), time_rule, time_panels);
}

double truncation_bound(const MarketParams& p, const Envelope& env, double L, double x, double tau,
                        const QuadratureRule& time_rule, int time_panels)
{
    if (!(L > 0.0))
        throw ValidationError("truncation half-width must be positive");
    return source_tail_bound(p.sigma, p.rho(), p.r + p.c_m(), reaction_envelope(p, env), -L, L, x, tau, time_rule,
                             time_panels);
}

}  // namespace xva
