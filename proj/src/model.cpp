#include "xva/model.hpp"

#include "xva/errors.hpp"
#include "xva/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace xva {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ValidationError(what);
}

bool finite_all(std::initializer_list<double> vs)
{
    return std::all_of(vs.begin(), vs.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

double MarketParams::c_m_min() const
{
    return std::max(issuer_loss_rate(), counterparty_loss_rate());
}

double MarketParams::c_m() const
{
    return c_m_override ? *c_m_override : c_m_min();
}

void MarketParams::validate() const
{
    require(finite_all({r, q_s, gamma_s, sigma, lambda_b, lambda_c, recovery_b, recovery_c, funding_spread}),
            "market parameters must be finite");
    require(sigma > 0.0, "sigma must be positive");
    require(lambda_b >= 0.0, "lambda_B must be non-negative");
    require(lambda_c >= 0.0, "lambda_C must be non-negative");
    require(funding_spread >= 0.0, "s_F must be non-negative");
    require(recovery_b >= 0.0 && recovery_b <= 1.0, "R_B must lie in [0, 1]");
    require(recovery_c >= 0.0 && recovery_c <= 1.0, "R_C must lie in [0, 1]");
    if (c_m_override) {
        require(std::isfinite(*c_m_override), "c_M must be finite");
        require(*c_m_override >= c_m_min(),
                "c_M must be at least max{(1-R_B)lambda_B, (1-R_C)lambda_C + s_F}");
    }
}

MarketParams reference_market()
{
    return MarketParams{};
}

std::string_view to_string(ContractKind kind)
{
    switch (kind) {
    case ContractKind::Call: return "call";
    case ContractKind::Forward: return "forward";
    case ContractKind::Gap: return "gap";
    }
    return "unknown";
}

ContractKind contract_kind_from_string(std::string_view name)
{
    if (name == "call")
        return ContractKind::Call;
    if (name == "forward")
        return ContractKind::Forward;
    if (name == "gap")
        return ContractKind::Gap;
    throw ValidationError("unknown contract kind '" + std::string(name) + "'");
}

Contract Contract::call(double K, double T)
{
    Contract c{ContractKind::Call, K, 0.0, T};
    c.validate();
    return c;
}

Contract Contract::forward(double K, double T)
{
    Contract c{ContractKind::Forward, K, 0.0, T};
    c.validate();
    return c;
}

Contract Contract::gap(double K_s, double K_t, double T)
{
    Contract c{ContractKind::Gap, K_s, K_t, T};
    c.validate();
    return c;
}

double Contract::exercise_log_boundary() const
{
    switch (kind) {
    case ContractKind::Call: return std::log(strike);
    case ContractKind::Forward: return -std::numeric_limits<double>::infinity();
    case ContractKind::Gap: return std::log(trigger);
    }
    return 0.0;
}

std::optional<double> Contract::payoff_kink() const
{
    if (kind == ContractKind::Forward)
        return std::nullopt;
    return exercise_log_boundary();
}

void Contract::validate() const
{
    require(std::isfinite(strike) && strike > 0.0, "strike must be positive");
    require(std::isfinite(maturity) && maturity > 0.0, "maturity must be positive");
    if (kind == ContractKind::Gap) {
        require(std::isfinite(trigger) && trigger > 0.0, "gap trigger must be positive");
        require(strike > trigger, "gap strike K_s must exceed the trigger K_t");
    }
}

EvalPoint EvalPoint::from_log_price(double tau, double x)
{
    return {tau, x, std::exp(x)};
}

EvalPoint EvalPoint::from_price(double tau, double S)
{
    require(S > 0.0, "price must be positive");
    return {tau, std::log(S), S};
}

double norm_cdf(double z)
{
    return 0.5 * erfc(-z / std::sqrt(2.0));
}

double payoff(const Contract& contract, double S)
{
    require(S > 0.0, "payoff requires S > 0");
    switch (contract.kind) {
    case ContractKind::Call: return positive_part(S - contract.strike);
    case ContractKind::Forward: return S - contract.strike;
    case ContractKind::Gap: return S >= contract.trigger ? S - contract.strike : 0.0;
    }
    return 0.0;
}

double transformed_payoff(const Contract& contract, double x)
{
    return payoff(contract, std::exp(x));
}

double risk_free_price(const Contract& contract, const MarketParams& p, double tau, double S)
{
    require(tau >= 0.0, "risk_free_price requires tau >= 0");
    require(S > 0.0, "risk_free_price requires S > 0");
    if (tau == 0.0)
        return payoff(contract, S);

    const double carry_df = std::exp((p.carry() - p.r) * tau);
    const double df = std::exp(-p.r * tau);
    if (contract.kind == ContractKind::Forward)
        return carry_df * S - df * contract.strike;

    // The log-moneyness is taken against K (call) or the trigger K_t (gap);
    // the drift of the underlying is the carry q_S - gamma_S.
    const double boundary = contract.kind == ContractKind::Call ? contract.strike : contract.trigger;
    const double vol = p.sigma * std::sqrt(tau);
    const double d1 = (std::log(S / boundary) + (p.carry() + 0.5 * p.sigma * p.sigma) * tau) / vol;
    const double d2 = d1 - vol;
    return carry_df * S * norm_cdf(d1) - df * contract.strike * norm_cdf(d2);
}

double reaction_g(const MarketParams& p, double u)
{
    return p.issuer_loss_rate() * negative_part(u) - p.counterparty_loss_rate() * positive_part(u) + p.c_m() * u;
}

double inhomogeneity_f(const MarketParams& p, double V)
{
    return -(p.recovery_b * p.lambda_b + p.lambda_c) * negative_part(V)
           + (p.lambda_b + p.recovery_c * p.lambda_c) * positive_part(V) - p.funding_spread * positive_part(V);
}

}  // namespace xva
