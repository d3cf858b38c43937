#include "xva/monotone.hpp"

#include "xva/errors.hpp"
#include "xva/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace xva {

namespace {

BreakList payoff_breaks(const Contract& contract)
{
    BreakList b;
    if (auto kink = contract.payoff_kink())
        b.add(*kink);
    return b;
}

double sup_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

/// Restriction of a stored iterate to the output grid.
Surface restrict_to(const Surface& s, const GridSpec& grid)
{
    return Surface::sample(grid, [&](double tau, double x) { return s.eval(tau, x); }, s.order());
}

struct OrderingTally {
    double max_excess = 0.0;
    std::size_t count = 0;

    /// Records lhs <= rhs checks node by node.
    void check(const Surface& lhs, const Surface& rhs)
    {
        const auto a = lhs.values();
        const auto b = rhs.values();
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double excess = a[k] - b[k];
            if (excess > 0.0) {
                max_excess = std::max(max_excess, excess);
                if (excess > kOrderingTolerance * (1.0 + std::abs(b[k])))
                    ++count;
            }
        }
    }
};

bool residual_fits(const Surface& s)
{
    return s.rows() >= 5 && s.cols() >= 5;
}

}  // namespace

void IterationConfig::validate(const Contract& contract) const
{
    grid.validate();
    if (iterations < 1)
        throw ValidationError("iteration count must be at least 1");
    if (!(epsilon > 0.0))
        throw ValidationError("truncation margin epsilon must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ValidationError("relaxation alpha must lie in (0, 1]");
    if (space_order < 2 || time_order < 2)
        throw ValidationError("quadrature orders must be at least 2");
    if (space_panels < 1 || time_panels < 1)
        throw ValidationError("quadrature panel counts must be positive");
    if (!(kernel_cutoff > 0.0))
        throw ValidationError("kernel cutoff must be positive");
    if (grid.tau_lo != 0.0)
        throw ValidationError("output grid must start at tau = 0");
    if (grid.tau_last() > contract.maturity * (1.0 + 1e-12))
        throw ValidationError("output grid extends beyond maturity");
}

InterpOrder IterationConfig::order_for(const Contract& contract) const
{
    return interp_order.value_or(default_interp_order(contract.kind));
}

DuhamelQuadrature IterationConfig::quadrature() const
{
    DuhamelQuadrature q = DuhamelQuadrature::make(time_order, time_panels, space_order, space_panels);
    q.kernel_cutoff = kernel_cutoff;
    return q;
}

GridSpec output_grid(double T, double d_tau, double S_min, double S_max, double d_x)
{
    if (!(S_min > 0.0 && S_min < S_max))
        throw ValidationError("output price range requires 0 < S_min < S_max");
    const double lo = std::log(S_min);
    return lattice_grid({lo, std::log(S_max)}, lo, d_x, T, d_tau);
}

Surface iterate_step(const Surface& prev, const Contract& contract, const MarketParams& p,
                     const IterationConfig& cfg, const GridSpec& out)
{
    p.validate();
    contract.validate();
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
        throw ValidationError("relaxation alpha must lie in (0, 1]");
    out.validate();

    const double discount = p.r + p.c_m();
    const DuhamelTerm term{p.sigma, p.rho(), discount, cfg.epsilon};
    const DuhamelQuadrature q = cfg.quadrature();
    const BreakList kinks = payoff_breaks(contract);

    std::vector<double> values = cfg.mode == ExecutionMode::Serial
                                     ? step_source_reference(prev, p, term, q, out, kinks)
                                     : step_source_parallel(prev, p, term, q, out, kinks);

    const std::size_t nt = out.tau_count();
    const std::size_t nx = out.x_count();
    for (std::size_t i = 0; i < nt; ++i) {
        const double tau = out.tau(i);
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = out.x(j);
            double& v = values[i * nx + j];
            if (tau == 0.0) {
                v = transformed_payoff(contract, x);
                continue;
            }
            v += std::exp(-discount * tau) * payoff_integral(contract, p, tau, x);
            if (!std::isfinite(v))
                throw NumericalError("non-finite iterate at (tau=" + std::to_string(tau) + ", x=" + std::to_string(x)
                                     + ")");
            if (cfg.alpha != 1.0)
                v = cfg.alpha * v + (1.0 - cfg.alpha) * prev.eval(tau, x);
        }
    }
    return Surface(out, std::move(values), prev.order());
}

Surface residual(const Surface& u, const MarketParams& p)
{
    if (!residual_fits(u))
        throw ValidationError("residual stencil needs at least 5x5 nodes");
    const GridSpec& g = u.grid();
    const std::size_t nt = u.rows();
    const std::size_t nx = u.cols();
    const double half_var = 0.5 * p.sigma * p.sigma;
    const double rho = p.rho();
    const double decay = p.r + p.c_m();
    const double dt12 = 12.0 * g.d_tau;
    const double dx12 = 12.0 * g.d_x;
    const double dxx12 = 12.0 * g.d_x * g.d_x;

    GridSpec inner = g;
    inner.tau_lo = g.tau(2);
    inner.tau_max = g.tau(nt - 3);
    inner.x_hi = g.x(nx - 3);
    inner.drop_left(2);

    std::vector<double> d;
    d.reserve((nt - 4) * (nx - 4));
    for (std::size_t i = 2; i + 2 < nt; ++i) {
        for (std::size_t j = 2; j + 2 < nx; ++j) {
            const double uc = u.at(i, j);
            const double ut = (-u.at(i + 2, j) + 8.0 * u.at(i + 1, j) - 8.0 * u.at(i - 1, j) + u.at(i - 2, j)) / dt12;
            const double ux = (-u.at(i, j + 2) + 8.0 * u.at(i, j + 1) - 8.0 * u.at(i, j - 1) + u.at(i, j - 2)) / dx12;
            const double uxx = (-u.at(i, j + 2) + 16.0 * u.at(i, j + 1) - 30.0 * uc + 16.0 * u.at(i, j - 1)
                                - u.at(i, j - 2))
                               / dxx12;
            d.push_back(ut - half_var * uxx - rho * ux + decay * uc - reaction_g(p, uc));
        }
    }
    return Surface(inner, std::move(d), InterpOrder::Linear);
}

double sup_distance(const Surface& a, const Surface& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("sup_distance needs surfaces on the same grid");
    double m = 0.0;
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t k = 0; k < va.size(); ++k)
        m = std::max(m, std::abs(va[k] - vb[k]));
    return m;
}

double sup_norm(const Surface& a)
{
    return sup_abs(a.values());
}

MonotoneResult run_monotone(const Contract& contract, const MarketParams& p, const IterationConfig& cfg)
{
    p.validate();
    contract.validate();
    cfg.validate(contract);

    const InterpOrder order = cfg.order_for(contract);
    const GridSpec& out = cfg.grid;
    const int N = cfg.iterations;

    MonotoneResult res;
    res.schedule = domain_schedule({out.x_lo, out.x_last()}, N, cfg.epsilon, p.rho(), contract.maturity);

    // Built from the output grid outwards so that each stored domain covers
    // the next one plus a full margin after snapping to the lattice.
    std::vector<GridSpec> grids(static_cast<std::size_t>(N) + 1);
    grids[N] = out;
    for (int n = N - 1; n >= 0; --n) {
        const GridSpec& inner = grids[n + 1];
        grids[n] = lattice_grid({inner.x_lo - res.schedule.left_margin, inner.x_last() + res.schedule.right_margin},
                                out.x_lo, out.d_x, out.tau_max, out.d_tau);
        res.schedule.intervals[n] = {grids[n].x_lo, grids[n].x_last()};
    }
    res.schedule.intervals[N] = {out.x_lo, out.x_last()};

    const InitialSolution sub0 = initial_subsolution(contract, p, cfg.lambda_under);
    const InitialSolution super0 = initial_supersolution(contract, p, cfg.lambda_over);

    Surface sub = sub0.sample(grids[0], order);
    res.sub_surfaces.push_back(sub0.sample(out, order));
    std::optional<Surface> super;
    if (cfg.track_both) {
        super = super0.sample(grids[0], order);
        res.super_surfaces.push_back(super0.sample(out, order));
    }

    for (int n = 1; n <= N; ++n) {
        try {
            sub = iterate_step(sub, contract, p, cfg, grids[n]);
            if (super)
                super = iterate_step(*super, contract, p, cfg, grids[n]);
        } catch (const NumericalError& e) {
            throw NumericalError("iteration " + std::to_string(n) + ": " + e.what());
        }
        res.sub_surfaces.push_back(n == N ? sub : restrict_to(sub, out));
        if (super)
            res.super_surfaces.push_back(n == N ? *super : restrict_to(*super, out));
    }

    // Diagnostics on the shared output grid.
    OrderingTally total;
    for (int n = 0; n <= N; ++n) {
        IterationDiagnostics d;
        d.n = n;
        OrderingTally tally;
        const Surface& s = res.sub_surfaces[n];
        if (n > 0) {
            tally.check(res.sub_surfaces[n - 1], s);
            d.step_change_sub = sup_distance(s, res.sub_surfaces[n - 1]);
        }
        if (residual_fits(s)) {
            res.residual_sub.push_back(residual(s, p));
            d.residual_sup_norm_sub = sup_norm(res.residual_sub.back());
            d.residual_sup_norm = d.residual_sup_norm_sub;
        }
        if (cfg.track_both) {
            const Surface& o = res.super_surfaces[n];
            d.gap_sup_norm = sup_distance(o, s);
            if (n > 0) {
                tally.check(o, res.super_surfaces[n - 1]);
                d.step_change_super = sup_distance(o, res.super_surfaces[n - 1]);
            }
            for (int m = 0; m <= n; ++m) {
                tally.check(s, res.super_surfaces[m]);
                if (m < n)
                    tally.check(res.sub_surfaces[m], o);
            }
            if (residual_fits(o)) {
                res.residual_super.push_back(residual(o, p));
                d.residual_sup_norm_super = sup_norm(res.residual_super.back());
                d.residual_sup_norm = std::max(d.residual_sup_norm.value_or(0.0), *d.residual_sup_norm_super);
            }
        }
        d.max_ordering_violation = tally.max_excess;
        d.ordering_violations = tally.count;
        total.max_excess = std::max(total.max_excess, tally.max_excess);
        total.count += tally.count;
        res.diagnostics.push_back(d);
    }
    res.max_ordering_violation = total.max_excess;
    res.ordering_violations = total.count;

    const Envelope env = default_envelope(contract, p);
    Envelope used = env;
    used.lambda_under = sub0.lambda;
    used.lambda_over = super0.lambda;
    const QuadratureRule rule = gauss_legendre(16);
    const double T = out.tau_last();
    for (double x : {out.x_lo, out.x_last()}) {
        const double b = source_tail_bound(p.sigma, p.rho(), p.r + p.c_m(), reaction_envelope(p, used), x - cfg.epsilon,
                                           x + cfg.epsilon, x, T, rule, 4);
        res.truncation_bound = std::max(res.truncation_bound, b);
    }
    return res;
}

}  // namespace xva
