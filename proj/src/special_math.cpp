#include "xva/special_math.hpp"

#include "xva/errors.hpp"

#include <cmath>
#include <numbers>

namespace xva {

double erfc(double z)
{
    return std::erfc(z);
}

QuadratureRule QuadratureRule::mapped(double a, double b) const
{
    if (!(a < b))
        throw ValidationError("quadrature interval requires a < b");
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    QuadratureRule out;
    out.nodes.reserve(nodes.size());
    out.weights.reserve(weights.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out.nodes.push_back(mid + half * nodes[i]);
        out.weights.push_back(half * weights[i]);
    }
    return out;
}

QuadratureRule gauss_legendre(int order)
{
    if (order < 1)
        throw ValidationError("Gauss-Legendre order must be at least 1");

    const int n = order;
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);

    // Newton iteration on P_n from the Tricomi initial guess; roots are
    // symmetric so only the upper half is computed.
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16)
                break;
        }
        // Recompute the derivative at the converged root.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[n - 1 - i] = w;
        rule.weights[i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

QuadratureRule gauss_legendre(int order, double a, double b)
{
    if (!(a < b))
        throw ValidationError("quadrature interval requires a < b");
    return gauss_legendre(order).mapped(a, b);
}

double heat_kernel(double sigma, double tau, double x, double y)
{
    if (!(tau > 0.0))
        throw ValidationError("heat kernel requires tau > 0");
    const double var = sigma * sigma * tau;
    const double d = x - y;
    return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double payoff_integral(const Contract& contract, const MarketParams& p, double tau, double x)
{
    if (!(tau > 0.0))
        throw ValidationError("payoff integral requires tau > 0");
    const double growth = std::exp(x + p.carry() * tau);
    if (contract.kind == ContractKind::Forward)
        return growth - contract.strike;

    const double boundary = contract.exercise_log_boundary();
    const double scale = std::sqrt(2.0 * p.sigma * p.sigma * tau);
    const double rho = p.rho();
    const double i1 = 0.5 * growth * erfc((boundary - x - (rho + p.sigma * p.sigma) * tau) / scale);
    const double i2 = 0.5 * contract.paid_strike() * erfc((boundary - x - rho * tau) / scale);
    return i1 - i2;
}

}  // namespace xva

#include "xva/convolution.hpp"

namespace xva {

void panel_nodes(double lo, double hi, const QuadratureRule& unit, int panels, std::span<const double> breaks,
                 std::vector<WeightedNode>& out)
{
    out.clear();
    if (!(hi > lo))
        return;
    const double width = (hi - lo) / panels;
    auto push = [&](double a, double b) {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (std::size_t i = 0; i < unit.order(); ++i)
            out.push_back({mid + half * unit.nodes[i], half * unit.weights[i]});
    };
    std::size_t next = 0;
    for (int k = 0; k < panels; ++k) {
        double a = lo + k * width;
        const double b = (k == panels - 1) ? hi : lo + (k + 1) * width;
        while (next < breaks.size() && breaks[next] <= a)
            ++next;
        while (next < breaks.size() && breaks[next] < b) {
            push(a, breaks[next]);
            a = breaks[next];
            ++next;
        }
        push(a, b);
    }
}

DuhamelQuadrature DuhamelQuadrature::make(int time_order, int time_panels, int space_order, int space_panels)
{
    if (time_panels < 1 || space_panels < 1)
        throw ValidationError("quadrature panel counts must be positive");
    if (time_order < 2 || space_order < 2)
        throw ValidationError("quadrature orders must be at least 2");
    DuhamelQuadrature q;
    q.time_rule = gauss_legendre(time_order);
    q.time_panels = time_panels;
    q.space_rule = gauss_legendre(space_order);
    q.space_panels = space_panels;
    return q;
}

void time_nodes(const DuhamelTerm& term, const DuhamelQuadrature& q, double tau, std::vector<TimeNode>& out)
{
    out.clear();
    if (!(tau > 0.0))
        return;
    const double half = 0.5 * tau;
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    std::vector<WeightedNode> w;
    panel_nodes(0.0, std::sqrt(half), q.time_rule, q.time_panels, {}, w);
    auto push = [&](double elapsed, const WeightedNode& n) {
        TimeNode t;
        t.s = std::max(tau - elapsed, 0.0);
        t.elapsed = elapsed;
        t.factor = 2.0 * n.at * std::exp(-term.discount * elapsed) * n.weight * inv_sqrt_pi;
        t.spread = std::sqrt(2.0 * elapsed) * term.sigma;
        t.xi_max = std::min(term.half_width / t.spread, q.kernel_cutoff);
        out.push_back(t);
    };
    // s = v^2 on [0, tau/2], ordered by increasing s
    for (const WeightedNode& n : w)
        push(tau - n.at * n.at, n);
    // s = tau - w^2 on [tau/2, tau]
    for (auto it = w.rbegin(); it != w.rend(); ++it)
        push(it->at * it->at, *it);
}

}  // namespace xva
