#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace xva {

/// Constant model coefficients of the adjusted Black-Scholes market.
///
/// Rates are per year, sigma per square-root year, recoveries are fractions.
/// The drift `rho()` and the monotonization constant `c_m()` are always
/// derived from the primary fields and never stored.
struct MarketParams {
    double r = 0.1;
    double q_s = 0.1;
    double gamma_s = 0.02;
    double sigma = 0.5;
    double lambda_b = 0.02;
    double lambda_c = 0.03;
    double recovery_b = 0.7;
    double recovery_c = 0.8;
    double funding_spread = 0.05;
    /// Upward override of c_M. Must not fall below `c_m_min()`.
    std::optional<double> c_m_override;

    /// Effective financing rate q_S - gamma_S.
    double carry() const { return q_s - gamma_s; }
    /// Drift of the log-price equation, q_S - gamma_S - sigma^2/2.
    double rho() const { return q_s - gamma_s - 0.5 * sigma * sigma; }
    /// Loss rate applied to negative values: (1 - R_B) lambda_B.
    double issuer_loss_rate() const { return (1.0 - recovery_b) * lambda_b; }
    /// Loss-plus-funding rate applied to positive values: (1 - R_C) lambda_C + s_F.
    double counterparty_loss_rate() const { return (1.0 - recovery_c) * lambda_c + funding_spread; }
    double c_m_min() const;
    double c_m() const;

    /// Throws ValidationError if any invariant is violated.
    void validate() const;
};

/// Parameter set used for the reference experiments (r = q_S = 0.1, sigma = 0.5, ...).
MarketParams reference_market();

enum class ContractKind { Call, Forward, Gap };

std::string_view to_string(ContractKind kind);
ContractKind contract_kind_from_string(std::string_view name);

/// European payoff definition.
///
/// For Call and Forward `strike` is K. For Gap `strike` is K_s and
/// `trigger` is K_t (K_s > K_t); the trigger is ignored otherwise.
struct Contract {
    ContractKind kind = ContractKind::Call;
    double strike = 15.0;
    double trigger = 0.0;
    double maturity = 2.0;

    static Contract call(double K, double T);
    static Contract forward(double K, double T);
    static Contract gap(double K_s, double K_t, double T);

    /// Lower integration limit of the payoff integral in log-price:
    /// ln K (call), -inf (forward), ln K_t (gap).
    double exercise_log_boundary() const;
    /// Amount paid at exercise: K (call, forward) or K_s (gap).
    double paid_strike() const { return strike; }
    /// Log-price locations where the payoff is not smooth.
    std::optional<double> payoff_kink() const;
    bool has_nonnegative_payoff() const { return kind == ContractKind::Call; }

    void validate() const;
};

/// Time-to-maturity / log-price point with the matching price.
struct EvalPoint {
    double tau;
    double x;
    double S;

    static EvalPoint from_log_price(double tau, double x);
    static EvalPoint from_price(double tau, double S);
};

double norm_cdf(double z);

/// H(S). Rejects S <= 0.
double payoff(const Contract& contract, double S);
/// h(x) = H(e^x).
double transformed_payoff(const Contract& contract, double x);

/// Risk-free value V at time to maturity tau. Returns the payoff at tau = 0.
double risk_free_price(const Contract& contract, const MarketParams& p, double tau, double S);

/// Monotone reaction term g(u) of the semilinear problem.
double reaction_g(const MarketParams& p, double u);

/// Source term f(V) of the linear (M = V) problem.
double inhomogeneity_f(const MarketParams& p, double V);

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }
inline double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

}  // namespace xva
