#pragma once

#include "xva/special_math.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace xva {

struct WeightedNode {
    double at;
    double weight;
};

/// Gauss nodes over `panels` equal panels of [lo, hi]; a panel containing
/// one of the sorted `breaks` strictly inside is split there so that a kink
/// of the integrand never falls inside a Gauss panel.
void panel_nodes(double lo, double hi, const QuadratureRule& unit, int panels, std::span<const double> breaks,
                 std::vector<WeightedNode>& out);

/// Up to eight breakpoints of a source term, in the coordinates of its
/// spatial argument.
struct BreakList {
    static constexpr int kCapacity = 8;
    std::array<double, kCapacity> y{};
    int count = 0;

    void add(double v)
    {
        if (count < static_cast<int>(y.size()) && std::isfinite(v))
            y[count++] = v;
    }
};

/// Quadrature layout for the Duhamel source integral
///
///   int_0^tau e^{-k (tau-s)} int_{x-L}^{x+L} G(tau-s, x-z) q(s, z + rho (tau-s)) dz ds
///
/// with G the heat kernel of variance sigma^2 (tau-s). Time is split at tau/2:
/// s = tau - w^2 on the late half removes the kernel singularity at s = tau,
/// s = v^2 on the early half resolves the sqrt(s) layers that non-smooth
/// data leave near s = 0. Each half uses `time_panels` panels of
/// `time_rule`. Space uses the scaled
/// variable xi = (z - x) / sqrt(2 sigma^2 (tau-s)), cut at `kernel_cutoff`
/// where the Gaussian mass left out is erfc(kernel_cutoff).
struct DuhamelQuadrature {
    QuadratureRule time_rule;
    int time_panels = 1;
    QuadratureRule space_rule;
    int space_panels = 2;
    double kernel_cutoff = 7.0;

    static DuhamelQuadrature make(int time_order, int time_panels, int space_order, int space_panels);
};

struct DuhamelTerm {
    double sigma;
    double rho;
    double discount;
    double half_width;
};

/// One time node of the substituted integral: s, elapsed time tau - s and
/// the combined factor 2 w e^{-k (tau - s)} * weight / sqrt(pi), w being the
/// substitution variable of its half.
struct TimeNode {
    double s;
    double elapsed;
    double factor;
    double spread;  ///< sqrt(2 sigma^2 (tau - s))
    double xi_max;
};

void time_nodes(const DuhamelTerm& term, const DuhamelQuadrature& q, double tau, std::vector<TimeNode>& out);

/// Reference evaluation of the source integral. `source(s, y)` is the
/// integrand at time s and shifted argument y; `breaks(s)` returns a
/// BreakList of y-locations where the source has kinks.
template <class Source, class Breaks>
double duhamel_integral(const DuhamelTerm& term, const DuhamelQuadrature& q, double tau, double x, Source&& source,
                        Breaks&& breaks)
{
    if (!(tau > 0.0))
        return 0.0;
    std::vector<TimeNode> tn;
    time_nodes(term, q, tau, tn);
    std::vector<WeightedNode> xi_nodes;
    std::array<double, BreakList::kCapacity> cuts{};
    double total = 0.0;
    for (const TimeNode& t : tn) {
        const double shift = term.rho * t.elapsed;
        const BreakList bl = breaks(t.s);
        int ncut = 0;
        for (int b = 0; b < bl.count; ++b)
            cuts[ncut++] = (bl.y[b] - shift - x) / t.spread;
        std::sort(cuts.begin(), cuts.begin() + ncut);
        panel_nodes(-t.xi_max, t.xi_max, q.space_rule, q.space_panels, std::span<const double>(cuts.data(), ncut),
                    xi_nodes);
        double inner = 0.0;
        for (const WeightedNode& n : xi_nodes)
            inner += n.weight * std::exp(-n.at * n.at) * source(t.s, x + t.spread * n.at + shift);
        total += t.factor * inner;
    }
    return total;
}

template <class Source>
double duhamel_integral(const DuhamelTerm& term, const DuhamelQuadrature& q, double tau, double x, Source&& source)
{
    return duhamel_integral(term, q, tau, x, source, [](double) { return BreakList{}; });
}

}  // namespace xva
