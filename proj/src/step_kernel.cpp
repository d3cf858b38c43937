#include "xva/errors.hpp"
#include "xva/monotone.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

namespace xva {

namespace {

std::string outside_message(double s, double z, double y, const GridSpec& g)
{
    std::ostringstream msg;
    msg.precision(17);
    msg << "previous iterate queried outside its domain at (s=" << s << ", z=" << z << "): shifted argument " << y
        << " not in [" << g.x_lo << ", " << g.x_last() << "]";
    return msg.str();
}

/// One time node of an output row with its tau-slice stencil in the previous
/// surface and the unbroken spatial rule, weights premultiplied by e^{-xi^2}.
struct RowTimeNode {
    TimeNode t;
    double shift;
    std::size_t slice;
    double theta;
    BreakList breaks;
    std::vector<WeightedNode> xi;
};

}  // namespace

BreakList source_breaks(const Surface& prev, double s, const BreakList& kinks)
{
    BreakList out = kinks;
    const GridSpec& g = prev.grid();
    const std::size_t rows = prev.rows();
    const std::size_t cols = prev.cols();
    double pos = std::max(snap_to_node((s - g.tau_lo) / g.d_tau), 0.0);
    const std::size_t k = rows > 1 ? std::min(static_cast<std::size_t>(pos), rows - 2) : 0;
    const double theta = rows > 1 ? std::min(pos - static_cast<double>(k), 1.0) : 0.0;
    auto node = [&](std::size_t j) {
        const double a = prev.at(k, j);
        return theta != 0.0 ? (1.0 - theta) * a + theta * prev.at(k + 1, j) : a;
    };
    auto cell = [&](std::size_t j, double t) {
        const double a = prev.eval_slice(k, g.x(j) + t * g.d_x);
        return theta != 0.0 ? (1.0 - theta) * a + theta * prev.eval_slice(k + 1, g.x(j) + t * g.d_x) : a;
    };
    double left = node(0);
    for (std::size_t j = 0; j + 1 < cols; ++j) {
        const double right = node(j + 1);
        if ((left < 0.0 && right > 0.0) || (left > 0.0 && right < 0.0)) {
            double t = left / (left - right);
            if (prev.order() == InterpOrder::Cubic) {
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 40; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if ((cell(j, mid) < 0.0) == (left < 0.0))
                        lo = mid;
                    else
                        hi = mid;
                }
                t = 0.5 * (lo + hi);
            }
            out.add(g.x(j) + t * g.d_x);
        }
        left = right;
    }
    return out;
}

std::vector<double> step_source_reference(const Surface& prev, const MarketParams& p, const DuhamelTerm& term,
                                          const DuhamelQuadrature& q, const GridSpec& out, const BreakList& kinks)
{
    const std::size_t nt = out.tau_count();
    const std::size_t nx = out.x_count();
    std::vector<double> result(nt * nx, 0.0);
    std::map<double, BreakList> breaks;
    auto breaks_at = [&](double s) -> const BreakList& {
        auto it = breaks.find(s);
        if (it == breaks.end())
            it = breaks.emplace(s, source_breaks(prev, s, kinks)).first;
        return it->second;
    };
    for (std::size_t i = 0; i < nt; ++i) {
        const double tau = out.tau(i);
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = out.x(j);
            auto source = [&](double s, double y) {
                if (!prev.contains(s, y))
                    throw NumericalError(outside_message(s, y - term.rho * (tau - s), y, prev.grid()));
                return reaction_g(p, prev.eval(s, y));
            };
            result[i * nx + j] = duhamel_integral(term, q, tau, x, source, breaks_at);
        }
    }
    return result;
}

std::vector<double> step_source_parallel(const Surface& prev, const MarketParams& p, const DuhamelTerm& term,
                                         const DuhamelQuadrature& q, const GridSpec& out, const BreakList& kinks)
{
    const std::size_t nt = out.tau_count();
    const std::size_t nx = out.x_count();
    std::vector<double> result(nt * nx, 0.0);

    const GridSpec& pg = prev.grid();
    const std::size_t prev_rows = prev.rows();
    const std::size_t prev_cols = prev.cols();
    const bool cubic = prev.order() == InterpOrder::Cubic;
    const double* values = prev.values().data();
    const double* moments = cubic ? prev.moments(0).data() : nullptr;
    const double prev_tau_last = pg.tau_last();

    const double slope_pos = p.c_m() - p.counterparty_loss_rate();
    const double slope_neg = p.c_m() - p.issuer_loss_rate();

    // Time nodes depend on the output row only.
    std::vector<std::vector<RowTimeNode>> rows(nt);
    {
        std::vector<TimeNode> tn;
        std::vector<WeightedNode> xi;
        for (std::size_t i = 0; i < nt; ++i) {
            const double tau = out.tau(i);
            if (!(tau > 0.0))
                continue;
            time_nodes(term, q, tau, tn);
            for (const TimeNode& t : tn) {
                RowTimeNode r;
                r.t = t;
                r.shift = term.rho * t.elapsed;
                if (t.s > prev_tau_last * (1.0 + 1e-12) + 1e-12)
                    throw NumericalError(outside_message(t.s, 0.0, 0.0, pg));
                double pos = snap_to_node((t.s - pg.tau_lo) / pg.d_tau);
                pos = std::max(pos, 0.0);
                std::size_t k = prev_rows > 1 ? std::min(static_cast<std::size_t>(pos), prev_rows - 2) : 0;
                r.slice = k;
                r.theta = prev_rows > 1 ? std::min(pos - static_cast<double>(k), 1.0) : 0.0;
                r.breaks = source_breaks(prev, t.s, kinks);
                panel_nodes(-t.xi_max, t.xi_max, q.space_rule, q.space_panels, {}, xi);
                r.xi = xi;
                for (WeightedNode& n : r.xi)
                    n.weight *= std::exp(-n.at * n.at);
                rows[i].push_back(std::move(r));
            }
        }
    }

    std::atomic<bool> failed{false};
    std::string failure;

    auto slice_value = [&](std::size_t k, std::size_t j0, double t) {
        const double* v = values + k * prev_cols;
        if (!cubic)
            return (1.0 - t) * v[j0] + t * v[j0 + 1];
        const double* m = moments + k * prev_cols;
        return cubic_cell(v[j0], v[j0 + 1], m[j0], m[j0 + 1], pg.d_x, t);
    };

    const long long total = static_cast<long long>(nt * nx);
#pragma omp parallel
    {
        std::vector<WeightedNode> broken;
        std::array<double, BreakList::kCapacity> cuts{};
        const double upper = static_cast<double>(prev_cols - 1);

#pragma omp for schedule(dynamic, 16)
        for (long long idx = 0; idx < total; ++idx) {
            if (failed.load(std::memory_order_relaxed))
                continue;
            const std::size_t i = static_cast<std::size_t>(idx) / nx;
            const std::size_t j = static_cast<std::size_t>(idx) % nx;
            if (rows[i].empty())
                continue;
            const double x = out.x(j);
            double acc = 0.0;
            for (const RowTimeNode& r : rows[i]) {
                const double centre = x + r.shift;
                int ncut = 0;
                for (int b = 0; b < r.breaks.count; ++b) {
                    const double c = (r.breaks.y[b] - centre) / r.t.spread;
                    if (c > -r.t.xi_max && c < r.t.xi_max)
                        cuts[ncut++] = c;
                }
                const std::vector<WeightedNode>* nodes = &r.xi;
                if (ncut > 0) {
                    std::sort(cuts.begin(), cuts.begin() + ncut);
                    panel_nodes(-r.t.xi_max, r.t.xi_max, q.space_rule, q.space_panels,
                                std::span<const double>(cuts.data(), ncut), broken);
                    for (WeightedNode& n : broken)
                        n.weight *= std::exp(-n.at * n.at);
                    nodes = &broken;
                }
                double inner = 0.0;
                for (const WeightedNode& n : *nodes) {
                    const double y = centre + r.t.spread * n.at;
                    double pos = pg.x_position(y);
                    if (pos < 0.0 || pos > upper) {
                        const double slack = 1e-10 * (1.0 + std::abs(y)) / pg.d_x;
                        if (pos < -slack || pos > upper + slack) {
                            if (!failed.exchange(true)) {
#pragma omp critical(xva_step_failure)
                                failure = outside_message(r.t.s, y - r.shift, y, pg);
                            }
                            break;
                        }
                        pos = std::min(std::max(pos, 0.0), upper);
                    }
                    pos = snap_to_node(pos);
                    const std::size_t j0 = std::min(static_cast<std::size_t>(pos), prev_cols - 2);
                    const double t = pos - static_cast<double>(j0);
                    double u = slice_value(r.slice, j0, t);
                    if (r.theta != 0.0)
                        u = (1.0 - r.theta) * u + r.theta * slice_value(r.slice + 1, j0, t);
                    inner += n.weight * (u > 0.0 ? slope_pos * u : slope_neg * u);
                }
                acc += r.t.factor * inner;
            }
            result[static_cast<std::size_t>(idx)] = acc;
        }
    }
    if (failed.load())
        throw NumericalError(failure);
    return result;
}

}  // namespace xva
