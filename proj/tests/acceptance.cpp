// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed
// here; reference values come from the oracles in this directory.

#include "oracles.hpp"
#include "truncation_oracle.hpp"
#include "xva/linear.hpp"
#include "xva/monotone.hpp"
#include "xva/runner.hpp"
#include "xva/special_math.hpp"
#include "xva/truncation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace xva;
namespace fs = std::filesystem;

namespace {

constexpr double kCallOracleTol = 1e-3;       // 1: relative sup-norm
constexpr double kChainTol = 1e-6;            // 2: relative nodewise
constexpr double kStencilTol = 1e-8;          // 3: FD residual vs analytic
constexpr double kSqueezeTol = 1e-2;          // 4: final gap
constexpr double kIdentityTol = 1e-8;         // 5: max abs
constexpr double kNegligibleBound = 1e-15;    // 6: bound at |L - x| = 8, relative to the source scale
constexpr double kLinearRelTol = 1e-4;        // 7: call vs closed form
constexpr double kRiskFreeTol = 1e-6;         // 7: zero credit
constexpr double kErfcTol = 1e-13;            // 8
constexpr double kQuadratureTol = 1e-12;      // 8
constexpr double kRelaxationTol = 2e-3;       // 9: alpha 0.5 vs 1
constexpr double kFixedPointTol = 1e-13;      // 9: invariance

// reduced numerics for the relaxation comparison; both runs share them
constexpr double kRelaxationEpsilon = 4.0;
constexpr int kRelaxationOrder = 16;
constexpr int kRelaxationFullSteps = 5;
constexpr int kRelaxationHalfSteps = 20;

std::map<int, std::string> verdicts;
int failures = 0;

void report(int k, bool pass, const std::string& detail)
{
    verdicts[k] = std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(k) + ": " + detail;
    std::cout << "  criterion " << k << " evaluated" << std::endl;
    if (!pass)
        ++failures;
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Black-Scholes with carry q_S - gamma_S, normal cdf through the erfc oracle.
double bs_call(const MarketParams& p, double K, double tau, double S)
{
    const long double vol = p.sigma * std::sqrt(tau);
    const long double carry = p.q_s - p.gamma_s;
    const long double d1 = (std::log(S / K) + (carry + 0.5L * p.sigma * p.sigma) * tau) / vol;
    const long double d2 = d1 - vol;
    auto N = [](long double d) { return 0.5L * oracle::erfc(-d / std::sqrt(2.0L)); };
    return static_cast<double>(std::exp((carry - p.r) * tau) * S * N(d1) - std::exp(-p.r * tau) * K * N(d2));
}

// Zero-credit-free linear problem for V >= 0: U = k(tau) V with
// k' = -(lambda_B + lambda_C) k + (lambda_B + R_C lambda_C - s_F), k(0) = 1.
double linear_factor(const MarketParams& p, double tau)
{
    const double t = p.lambda_b + p.lambda_c;
    const double c = p.lambda_b + p.recovery_c * p.lambda_c - p.funding_spread;
    return c / t + (1.0 - c / t) * std::exp(-t * tau);
}

double g_oracle(const MarketParams& p, double u)
{
    const double cm = p.c_m();
    const double up = cm - (1.0 - p.recovery_c) * p.lambda_c - p.funding_spread;
    const double down = cm - (1.0 - p.recovery_b) * p.lambda_b;
    return u > 0.0 ? up * u : down * u;
}

// D applied to sign C e^{lambda tau + a x}, differentiated by hand.
double residual_oracle(const MarketParams& p, const InitialSolution& s, double tau, double x)
{
    const double u = s.sign * s.coefficient * std::exp(s.lambda * tau + s.a * x);
    const double rho = p.q_s - p.gamma_s - 0.5 * p.sigma * p.sigma;
    return (s.lambda - 0.5 * p.sigma * p.sigma * s.a * s.a - rho * s.a + p.r + p.c_m()) * u - g_oracle(p, u);
}

struct Chains {
    std::size_t violations = 0;
    double worst = 0.0;
    void check(const Surface& lo, const Surface& hi)
    {
        const auto a = lo.values(), b = hi.values();
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double excess = a[k] - b[k];
            if (excess > kChainTol * std::max(1.0, std::fabs(b[k]))) {
                ++violations;
                worst = std::max(worst, excess);
            }
        }
    }
};

RunConfig reference_config(const Contract& c)
{
    RunConfig cfg;
    cfg.contract = c;
    cfg.resolve();
    cfg.validate();
    return cfg;
}

struct FullRun {
    Contract contract;
    MonotoneResult result;
    double seconds = 0.0;
};

FullRun full_run(const Contract& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = reference_config(c);
    FullRun r{c, run_monotone(c, cfg.market, cfg.iteration_config())};
    r.seconds = seconds_since(t0);
    std::cout << "  full " << to_string(c.kind) << " run: " << sci(r.seconds) << " s" << std::endl;
    return r;
}

void criterion1(const MarketParams& p, const FullRun& call)
{
    double err = 0.0, scale = 0.0;
    const Surface& sub = call.result.final_sub();
    const Surface& sup = call.result.final_super();
    const GridSpec& g = sub.grid();
    for (std::size_t i = 0; i < sub.rows(); ++i) {
        const double tau = g.tau(i);
        for (std::size_t j = 0; j < sub.cols(); ++j) {
            const double S = std::exp(g.x(j));
            const double V = tau == 0.0 ? std::max(S - 15.0, 0.0) : bs_call(p, 15.0, tau, S);
            const double U = std::exp(-((1.0 - p.recovery_c) * p.lambda_c + p.funding_spread) * tau) * V;
            err = std::max({err, std::fabs(sub.at(i, j) - U), std::fabs(sup.at(i, j) - U)});
            scale = std::max(scale, std::fabs(U));
        }
    }
    // the x lattice starts at ln 10 and ends on the first node at or past ln 20
    const bool range = std::fabs(std::exp(g.x(0)) - 10.0) < 1e-9 && g.x_last() >= std::log(20.0) - 1e-12
                       && g.x_last() - g.d_x < std::log(20.0) && std::fabs(g.tau_last() - 2.0) < 1e-12;
    report(1, range && err / scale <= kCallOracleTol,
           "call N=5 sub/super vs discounted Black-Scholes rel sup error " + sci(err / scale) + " (tol "
               + sci(kCallOracleTol) + ") on the S in [10, 20] output lattice (last node " + sci(std::exp(g.x_last()))
               + "), tau in [0, 2]");
}

void criterion2(const std::vector<const FullRun*>& runs)
{
    Chains c;
    std::size_t checks = 0;
    for (const FullRun* r : runs) {
        const auto& sub = r->result.sub_surfaces;
        const auto& sup = r->result.super_surfaces;
        for (std::size_t n = 1; n < sub.size(); ++n) {
            c.check(sub[n - 1], sub[n]);
            c.check(sup[n], sup[n - 1]);
            checks += 2;
        }
        for (const Surface& a : sub)
            for (const Surface& b : sup) {
                c.check(a, b);
                ++checks;
            }
    }
    report(2, c.violations == 0,
           std::to_string(checks) + " surface comparisons (chains and all sub/super pairs, call forward gap), "
               + std::to_string(c.violations) + " violations, worst excess " + sci(c.worst) + " (rel tol "
               + sci(kChainTol) + ")");
}

void criterion3(const MarketParams& p)
{
    bool ok = true;
    double worst_sign = 0.0, worst_stencil = 0.0;
    const GridSpec fine = output_grid(2.0, 0.01, 10.0, 20.0, 0.01);
    for (const Contract& c : {Contract::call(15, 2), Contract::forward(15, 2), Contract::gap(15, 12, 2)}) {
        const InitialSolution over = initial_supersolution(c, p);
        const InitialSolution under = initial_subsolution(c, p);
        const double C = c.kind == ContractKind::Call ? 0.0 : c.kind == ContractKind::Forward ? 15.0 : 3.0;
        ok = ok && std::fabs(over.lambda + 0.076) < 1e-12 && std::fabs(under.lambda + 0.094) < 1e-12
             && under.coefficient == C && over.coefficient == 1.0 && over.a == 1.0;
        for (double tau = 0.0; tau <= 2.0 + 1e-12; tau += 0.05)
            for (double x = std::log(10.0) - 3.0; x <= std::log(20.0) + 3.0; x += 0.05) {
                const double up = residual_oracle(p, over, tau, x);
                const double down = residual_oracle(p, under, tau, x);
                // the supersolution residual vanishes identically at the default exponent
                worst_sign = std::max({worst_sign, -up / std::exp(x), down});
                ok = ok && up >= -1e-15 * std::exp(x) && down <= 0.0;
            }
        for (const InitialSolution* s : {&over, &under}) {
            const Surface d = residual(s->sample(fine, InterpOrder::Cubic), p);
            const GridSpec& g = d.grid();
            for (std::size_t i = 0; i < d.rows(); ++i)
                for (std::size_t j = 0; j < d.cols(); ++j)
                    worst_stencil =
                        std::max(worst_stencil, std::fabs(d.at(i, j) - residual_oracle(p, *s, g.tau(i), g.x(j))));
        }
    }
    ok = ok && worst_stencil <= kStencilTol;
    report(3, ok,
           "D(sub0) <= 0 and D(super0) >= 0 for call forward gap (worst wrong-side value " + sci(worst_sign)
               + "); FD residual vs analytic on h=0.01 max " + sci(worst_stencil) + " (tol " + sci(kStencilTol) + ")");
}

void criterion4(const std::vector<const FullRun*>& runs)
{
    bool ok = true;
    std::string detail;
    for (const FullRun* r : runs) {
        const auto& d = r->result.diagnostics;
        for (std::size_t n = 1; n < d.size(); ++n)
            ok = ok && *d[n].gap_sup_norm < *d[n - 1].gap_sup_norm;
        const double last = *d.back().gap_sup_norm;
        ok = ok && last < kSqueezeTol && d.size() == 6;
        detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(r->contract.kind)) + " squeeze "
                  + sci(*d.front().gap_sup_norm) + " -> " + sci(last);
    }
    report(4, ok, "strictly decreasing, " + detail + " at n=5 (tol " + sci(kSqueezeTol) + ")");
}

void criterion5(const MarketParams& p)
{
    double worst = 0.0;
    for (const Contract& c : {Contract::call(15, 2), Contract::forward(15, 2), Contract::gap(15, 12, 2)})
        for (int i = 1; i <= 100; ++i) {
            const double tau = 2.0 * i / 100.0;
            for (int j = 0; j < 100; ++j) {
                const double x = std::log(5.0) + j * (std::log(40.0) - std::log(5.0)) / 99.0;
                const double lhs = std::exp(-p.r * tau) * payoff_integral(c, p, tau, x);
                worst = std::max(worst, std::fabs(lhs - risk_free_price(c, p, tau, std::exp(x))));
            }
        }
    report(5, worst <= kIdentityTol,
           "e^{-r tau} I vs risk_free_price on 100x100 (tau, x) for call forward gap, max abs " + sci(worst) + " (tol "
               + sci(kIdentityTol) + ")");
}

void criterion6(const MarketParams& p)
{
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> ux(std::log(10.0), std::log(20.0));
    std::uniform_real_distribution<double> ut(0.05, 2.0);
    std::uniform_real_distribution<double> ul(0.3, 3.0);
    std::uniform_real_distribution<double> theta(-1.0, 1.0);
    const QuadratureRule rule = gauss_legendre(32);
    // raised c_M so both envelope terms are live
    MarketParams q = p;
    q.c_m_override = 0.08;
    const double discount = q.r + q.c_m();
    int sound = 0;
    double tightest = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Contract c = k % 2 ? Contract::forward(15, 2) : Contract::gap(15, 12, 2);
        const Envelope env = default_envelope(c, q);
        const double x = ux(rng), tau = ut(rng), L = x + ul(rng);
        const oracle::MixtureSource src{reaction_envelope(q, env), theta(rng), theta(rng)};
        const long double inside = oracle::windowed_integral(q, discount, src, -L, L, x, tau);
        const long double full = oracle::windowed_integral(q, discount, src, -L - 20.0, L + 20.0, x, tau);
        const double gap = static_cast<double>(std::fabs(full - inside));
        const double bound = truncation_bound(q, env, L, x, tau, rule, 8);
        if (gap <= bound * (1.0 + 1e-9) + 1e-18)
            ++sound;
        if (bound > 0.0)
            tightest = std::max(tightest, gap / bound);
    }
    double worst = 0.0;
    for (const MarketParams& m : {p, q})
        for (const Contract& c : {Contract::forward(15, 2), Contract::gap(15, 12, 2)}) {
            const Envelope env = default_envelope(c, m);
            const SourceEnvelope s = reaction_envelope(m, env);
            for (double tau : {0.1, 0.5, 1.0, 2.0})
                for (double x : {std::log(10.0), std::log(15.0), std::log(20.0)}) {
                    const double scale = s.c_plus * std::exp(x) + s.c_minus;
                    worst = std::max(worst, truncation_bound(m, env, x + 8.0, x, tau, rule) / scale);
                }
        }
    report(6, sound == 50 && worst <= kNegligibleBound,
           std::to_string(sound) + "/50 random samples with measured gap <= bound (max gap/bound "
               + sci(tightest) + "); relative bound at |L-x|=8 " + sci(worst) + " (tol " + sci(kNegligibleBound) + ")");
}

void criterion7(const MarketParams& p)
{
    const Contract c = Contract::call(15, 2);
    const LinearNumerics num;
    double worst = 0.0;
    for (double tau : {0.25, 1.0, 2.0})
        for (double S : {10.0, 15.0, 20.0}) {
            const double exact = linear_factor(p, tau) * bs_call(p, 15.0, tau, S);
            const double got = linear_adjusted_price(c, p, tau, std::log(S), num);
            worst = std::max(worst, std::fabs(got - exact) / std::fabs(exact));
        }
    MarketParams z = p;
    z.lambda_b = z.lambda_c = z.funding_spread = 0.0;
    double worst_rf = 0.0;
    for (const Contract& k : {Contract::call(15, 2), Contract::forward(15, 2), Contract::gap(15, 12, 2)})
        for (double tau : {0.25, 1.0, 2.0})
            for (double S : {10.0, 15.0, 20.0}) {
                const double got = linear_adjusted_price(k, z, tau, std::log(S), num);
                worst_rf = std::max(worst_rf, std::fabs(got - risk_free_price(k, z, tau, S)));
            }
    report(7, worst <= kLinearRelTol && worst_rf <= kRiskFreeTol,
           "linear call vs closed form at 9 points max rel " + sci(worst) + " (tol " + sci(kLinearRelTol)
               + "); zero credit vs risk-free max abs " + sci(worst_rf) + " (tol " + sci(kRiskFreeTol) + ")");
}

void criterion8()
{
    double worst = 0.0;
    for (int k = -20000; k <= 20000; ++k) {
        const double z = k * 5e-4;
        worst = std::max(worst, std::fabs(xva::erfc(z) - static_cast<double>(oracle::erfc(z))));
    }
    double worst_q = 0.0;
    for (int n = 1; n <= 64; ++n) {
        const QuadratureRule q = gauss_legendre(n);
        for (int d = 0; d <= 2 * n - 1; ++d) {
            const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
            worst_q = std::max(worst_q, std::fabs(q.integrate([&](double t) { return std::pow(t, d); }) - exact));
        }
    }
    report(8, worst <= kErfcTol && worst_q <= kQuadratureTol,
           "erfc vs oracle on |z| <= 10 max abs " + sci(worst) + " (tol " + sci(kErfcTol)
               + "); Gauss-Legendre orders 1..64 on degree <= 2n-1 max error " + sci(worst_q) + " (tol "
               + sci(kQuadratureTol) + ")");
}

IterationConfig relaxation_config(double alpha, int N)
{
    RunConfig cfg = reference_config(Contract::forward(15, 2));
    cfg.alpha = alpha;
    cfg.iterations = N;
    cfg.epsilon = kRelaxationEpsilon;
    cfg.space_order = cfg.time_order = kRelaxationOrder;
    cfg.track_both = false;
    return cfg.iteration_config();
}

void criterion9(const MarketParams& p)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Contract c = Contract::forward(15, 2);
    const MonotoneResult full = run_monotone(c, p, relaxation_config(1.0, kRelaxationFullSteps));
    const MonotoneResult half = run_monotone(c, p, relaxation_config(0.5, kRelaxationHalfSteps));
    const double last_step = *half.diagnostics.back().step_change_sub;
    const double diff = sup_distance(full.final_sub(), half.final_sub());

    // image of a non-negative surface under the call step is a fixed point
    const Contract call = Contract::call(15, 0.5);
    IterationConfig icfg;
    icfg.grid = output_grid(0.5, 0.05, 12.0, 18.0, 0.05);
    icfg.epsilon = 4.0;
    icfg.space_order = icfg.time_order = 16;
    const GridSpec& out = icfg.grid;
    const GridSpec wide = lattice_grid({out.x_lo - 10.0, out.x_last() + 10.0}, out.x_lo, out.d_x, 0.5, out.d_tau);
    const GridSpec mid = lattice_grid({out.x_lo - 5.0, out.x_last() + 5.0}, out.x_lo, out.d_x, 0.5, out.d_tau);
    const Surface image = iterate_step(initial_supersolution(call, p).sample(wide, InterpOrder::Linear), call, p, icfg, mid);
    double worst = 0.0;
    for (double alpha : {1.0, 0.75, 0.5, 0.25, 0.05}) {
        icfg.alpha = alpha;
        const Surface next = iterate_step(image, call, p, icfg, out);
        for (std::size_t i = 0; i < next.rows(); ++i)
            for (std::size_t j = 0; j < next.cols(); ++j)
                worst = std::max(worst, std::fabs(next.at(i, j) - image.eval(out.tau(i), out.x(j))));
    }
    report(9, diff <= kRelaxationTol && worst <= kFixedPointTol,
           "forward sub chain alpha=0.5 (n=" + std::to_string(kRelaxationHalfSteps) + ", last step "
               + sci(last_step) + ") vs alpha=1 (n=" + std::to_string(kRelaxationFullSteps) + ") sup diff "
               + sci(diff) + " (tol " + sci(kRelaxationTol) + "); fixed point drift under relaxed step " + sci(worst)
               + " (tol " + sci(kFixedPointTol) + "); " + sci(seconds_since(t0)) + " s");
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void criterion10()
{
    const fs::path root = fs::temp_directory_path() / "xva_acceptance_determinism";
    fs::remove_all(root);
    RunConfig cfg = reference_config(Contract::gap(15, 12, 0.5));
    cfg.d_tau = cfg.d_x = 0.05;
    cfg.s_min = 12.0;
    cfg.s_max = 18.0;
    cfg.iterations = 3;
    cfg.epsilon = 4.0;
    cfg.space_order = cfg.time_order = 16;
    cfg.all_iterations = true;
    std::ostringstream sink;
    int status = 0;
    for (const char* name : {"a", "b"}) {
        cfg.out_dir = (root / name).string();
        status |= run(cfg, sink, sink);
        cfg.mode = RunMode::Linear;
        cfg.out_dir = (root / name / "linear").string();
        status |= run(cfg, sink, sink);
        cfg.mode = RunMode::Monotone;
    }
    std::size_t files = 0, identical = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
        if (e.path().extension() != ".csv")
            continue;
        ++files;
        const fs::path twin = root / "b" / fs::relative(e.path(), root / "a");
        if (fs::exists(twin) && slurp(e.path()) == slurp(twin))
            ++identical;
    }
    report(10, status == 0 && files >= 10 && identical == files,
           std::to_string(identical) + "/" + std::to_string(files)
               + " CSV files bit-identical across two runs of the same config");
    fs::remove_all(root);
}

}  // namespace

int main()
{
    const MarketParams p = reference_market();
    const auto t0 = std::chrono::steady_clock::now();

    criterion5(p);
    criterion8();
    criterion3(p);
    criterion6(p);
    criterion7(p);
    criterion10();
    criterion9(p);

    const FullRun call = full_run(Contract::call(15, 2));
    criterion1(p, call);
    const FullRun forward = full_run(Contract::forward(15, 2));
    const FullRun gap = full_run(Contract::gap(15, 12, 2));
    criterion2({&call, &forward, &gap});
    criterion4({&forward, &gap});

    for (const auto& [k, line] : verdicts)
        std::cout << line << '\n';
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << " in "
              << sci(seconds_since(t0)) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
