#include "truncation_oracle.hpp"
#include "xva/errors.hpp"
#include "xva/monotone.hpp"
#include "xva/truncation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace xva;

namespace {

const MarketParams P = reference_market();

TEST(Truncation, ZeroEnvelopeGivesZero)
{
    Envelope env = default_envelope(Contract::call(15, 2), P);
    env.c_under = 0.0;
    MarketParams p = P;
    p.c_m_override = 0.08;
    const SourceEnvelope src = reaction_envelope(p, env);
    EXPECT_GT(src.c_plus, 0.0);
    SourceEnvelope none = src;
    none.c_plus = 0.0;
    none.c_minus = 0.0;
    EXPECT_EQ(source_tail_bound(p.sigma, p.rho(), 0.1, none, -1.0, 1.0, 0.0, 1.0, gauss_legendre(16)), 0.0);
}

TEST(Truncation, DefaultCmKillsOneTerm)
{
    for (const Contract& c : {Contract::call(15, 2), Contract::forward(15, 2), Contract::gap(15, 12, 2)}) {
        const SourceEnvelope s = reaction_envelope(P, default_envelope(c, P));
        EXPECT_EQ(s.c_plus, 0.0);
        if (c.kind == ContractKind::Call)
            EXPECT_EQ(s.c_minus, 0.0);
        else
            EXPECT_GT(s.c_minus, 0.0);
    }
}

TEST(Truncation, DefaultEnvelopeThresholds)
{
    const Envelope env = default_envelope(Contract::gap(15, 12, 2), P);
    EXPECT_NEAR(env.lambda_over, -0.076, 1e-15);
    EXPECT_NEAR(env.lambda_under, -0.094, 1e-15);
    EXPECT_EQ(env.c_under, 3.0);
    EXPECT_NO_THROW(env.validate(P));
    Envelope bad = env;
    bad.lambda_over = -0.08;
    EXPECT_THROW(bad.validate(P), ValidationError);
    bad = env;
    bad.lambda_under = -0.1;
    EXPECT_THROW(bad.validate(P), ValidationError);
}

TEST(Truncation, NegligibleAtEightLogUnits)
{
    const QuadratureRule rule = gauss_legendre(32);
    MarketParams up = P;
    up.c_m_override = 0.08;
    for (const MarketParams& p : {P, up}) {
        for (const Contract& c : {Contract::forward(15, 2), Contract::gap(15, 12, 2)}) {
            const Envelope env = default_envelope(c, p);
            const SourceEnvelope s = reaction_envelope(p, env);
            for (double tau : {0.1, 1.0, 2.0})
                for (double x : {std::log(10.0), std::log(20.0)}) {
                    const double L = x + 8.0;
                    const double b = truncation_bound(p, env, L, x, tau, rule);
                    EXPECT_LT(b, 1e-15 * (s.c_plus * std::exp(x) + s.c_minus) + 1e-300);
                }
        }
    }
}

TEST(Truncation, MatchesEnvelopeTailExactly)
{
    MarketParams p = P;
    p.c_m_override = 0.08;
    const Envelope env = default_envelope(Contract::forward(15, 2), p);
    oracle::MixtureSource q{reaction_envelope(p, env), 1.0L, -1.0L};  // |q| = envelope, both terms positive
    const double discount = p.r + p.c_m();
    const double x = 2.7, tau = 1.5, L = 3.4;
    const long double inside = oracle::windowed_integral(p, discount, q, -L, L, x, tau);
    const long double full = oracle::windowed_integral(p, discount, q, -L - 40.0, L + 40.0, x, tau);
    const double bound = truncation_bound(p, env, L, x, tau, gauss_legendre(32), 8);
    EXPECT_NEAR(bound, static_cast<double>(full - inside), 1e-9 * bound);
}

void check_soundness(const MarketParams& p, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(std::log(10.0), std::log(20.0));
    std::uniform_real_distribution<double> ut(0.05, 2.0);
    std::uniform_real_distribution<double> ul(0.3, 3.0);
    std::uniform_real_distribution<double> theta(-1.0, 1.0);
    const QuadratureRule rule = gauss_legendre(32);
    const double discount = p.r + p.c_m();
    const double eps = 10.0;
    int informative = 0;
    for (int k = 0; k < 50; ++k) {
        const Contract c = k % 2 ? Contract::forward(15, 2) : Contract::gap(15, 12, 2);
        const Envelope env = default_envelope(c, p);
        const double x = ux(rng), tau = ut(rng);
        const double L = x + ul(rng);
        const oracle::MixtureSource q{reaction_envelope(p, env), theta(rng), theta(rng)};
        const long double truncated = oracle::windowed_integral(p, discount, q, -L, L, x, tau);
        const long double full = oracle::windowed_integral(p, discount, q, -L - 2 * eps, L + 2 * eps, x, tau);
        const double gap = static_cast<double>(std::fabs(full - truncated));
        const double bound = truncation_bound(p, env, L, x, tau, rule, 8);
        EXPECT_LE(gap, bound * (1.0 + 1e-9) + 1e-18) << "x=" << x << " tau=" << tau << " L=" << L;
        if (gap > 1e-10)
            ++informative;
    }
    EXPECT_GT(informative, 10);
}

TEST(Truncation, SoundOnRandomSamplesDefaultCm)
{
    check_soundness(P, 101);
}

TEST(Truncation, SoundOnRandomSamplesRaisedCm)
{
    MarketParams p = P;
    p.c_m_override = 0.08;
    check_soundness(p, 202);
}

TEST(Truncation, RejectsNonPositiveWidth)
{
    EXPECT_THROW(truncation_bound(P, default_envelope(Contract::call(15, 2), P), 0.0, 0.0, 1.0, gauss_legendre(8)),
                 ValidationError);
}

}  // namespace
