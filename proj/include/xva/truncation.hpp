#pragma once

#include "xva/model.hpp"
#include "xva/special_math.hpp"

namespace xva {

/// A priori bounds -C_under e^{lambda_under tau} <= u <= C_over e^{lambda_over tau} e^{a x}
/// satisfied by every iterate of the monotone scheme.
struct Envelope {
    double c_under = 0.0;
    double lambda_under = 0.0;
    double c_over = 1.0;
    double lambda_over = 0.0;
    double a = 1.0;

    void validate(const MarketParams& p) const;
};

/// Default envelope of the initial sub/supersolution pair of `contract`:
/// C_over = a = 1, C_under = 0 / K / K_s - K_t, and both exponents at their
/// minimal admissible values.
Envelope default_envelope(const Contract& contract, const MarketParams& p);

/// Bound |q(s, y)| <= c_plus e^{lambda_plus s} e^{a y} + c_minus e^{lambda_minus s}
/// on a Duhamel source term.
struct SourceEnvelope {
    double c_plus = 0.0;
    double lambda_plus = 0.0;
    double a = 1.0;
    double c_minus = 0.0;
    double lambda_minus = 0.0;
};

/// Source envelope of g(u) for u inside `env`:
/// C+ = C_over (c_M - (1-R_C) lambda_C - s_F), C- = C_under (c_M - (1-R_B) lambda_B).
SourceEnvelope reaction_envelope(const MarketParams& p, const Envelope& env);

/// Upper bound on the part of the Duhamel source integral at (tau, x) that
/// lies outside z in [z_lo, z_hi], for a source bounded by `src`. Each tail
/// is a one-dimensional erfc integral in s evaluated with `time_rule`
/// (composite over `time_panels`) after the substitution s = tau - w^2.
double source_tail_bound(double sigma, double rho, double discount, const SourceEnvelope& src, double z_lo,
                         double z_hi, double x, double tau, const QuadratureRule& time_rule, int time_panels = 4);

/// Truncation error of the monotone-step source integral restricted to
/// [-L, L], for iterates inside `env`.
double truncation_bound(const MarketParams& p, const Envelope& env, double L, double x, double tau,
                        const QuadratureRule& time_rule, int time_panels = 4);

}  // namespace xva
