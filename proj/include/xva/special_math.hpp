#pragma once

#include "xva/model.hpp"

#include <cstddef>
#include <vector>

namespace xva {

/// Complementary error function 2/sqrt(pi) * int_z^inf exp(-t^2) dt.
double erfc(double z);

/// Gauss-Legendre nodes and weights on an interval (default [-1, 1]).
/// Nodes are strictly increasing; the rule integrates polynomials up to
/// degree 2*order - 1 exactly.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t order() const { return nodes.size(); }

    /// Affine image of this rule on [a, b].
    QuadratureRule mapped(double a, double b) const;

    template <class F>
    double integrate(F&& f) const
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

QuadratureRule gauss_legendre(int order);
QuadratureRule gauss_legendre(int order, double a, double b);

/// Composite Gauss-Legendre over `panels` equal sub-intervals of [a, b].
template <class F>
double integrate_composite(F&& f, double a, double b, const QuadratureRule& unit_rule, int panels)
{
    const double width = (b - a) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * width;
        const double mid = lo + 0.5 * width;
        const double half = 0.5 * width;
        for (std::size_t i = 0; i < unit_rule.order(); ++i)
            sum += half * unit_rule.weights[i] * f(mid + half * unit_rule.nodes[i]);
    }
    return sum;
}

/// Gaussian heat kernel (2 pi sigma^2 tau)^(-1/2) exp(-(x-y)^2 / (2 sigma^2 tau)).
double heat_kernel(double sigma, double tau, double x, double y);

/// Closed-form payoff convolution I = I_1 - I_2 of the transformed payoff
/// against the drifted heat kernel, without discounting.
///
/// e^{-r tau} I equals the risk-free price at the same point.
double payoff_integral(const Contract& contract, const MarketParams& p, double tau, double x);

}  // namespace xva
