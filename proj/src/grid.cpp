#include "xva/grid.hpp"

#include "xva/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

namespace xva {

namespace {

constexpr double kStepTolerance = 1e-9;

std::size_t node_count(double lo, double hi, double step)
{
    return static_cast<std::size_t>(std::floor((hi - lo) / step + kStepTolerance)) + 1;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::size_t GridSpec::tau_count() const
{
    return node_count(tau_lo, tau_max, d_tau);
}

std::size_t GridSpec::x_count() const
{
    return node_count(x_lo, x_hi, d_x);
}

void GridSpec::validate() const
{
    if (!(std::isfinite(tau_lo) && std::isfinite(tau_max) && std::isfinite(x_lo) && std::isfinite(x_hi)))
        throw ValidationError("grid bounds must be finite");
    if (!(d_tau > 0.0) || !(d_x > 0.0))
        throw ValidationError("grid steps must be positive");
    if (!(tau_lo >= 0.0) || tau_max < tau_lo)
        throw ValidationError("grid requires 0 <= tau_lo <= tau_max");
    if (!(x_lo < x_hi))
        throw ValidationError("grid requires x_lo < x_hi");
}

GridSpec lattice_grid(const Interval& span, double anchor, double d_x, double tau_max, double d_tau)
{
    if (!(d_x > 0.0))
        throw ValidationError("lattice step must be positive");
    if (!(span.lo < span.hi))
        throw ValidationError("lattice span must be non-empty");
    const double below = std::ceil((anchor - span.lo) / d_x - kStepTolerance);
    const double above = std::ceil((span.hi - anchor) / d_x - kStepTolerance);
    GridSpec g;
    g.tau_max = tau_max;
    g.d_tau = d_tau;
    g.x_lo = anchor - below * d_x;
    g.x_hi = anchor + above * d_x;
    g.d_x = d_x;
    g.x_anchor = anchor;
    g.x_origin = static_cast<std::ptrdiff_t>(below);
    g.validate();
    return g;
}

InterpOrder interp_order_from_int(int order)
{
    if (order == 1)
        return InterpOrder::Linear;
    if (order == 3)
        return InterpOrder::Cubic;
    throw ValidationError("interpolation order must be 1 or 3");
}

std::vector<double> not_a_knot_moments(std::span<const double> y, double h)
{
    const std::size_t n = y.size();
    if (n < 4)
        throw ValidationError("cubic interpolation needs at least four nodes per slice");

    std::vector<double> m(n, 0.0);
    const double c = 6.0 / (h * h);
    auto rhs = [&](std::size_t j) { return c * (y[j - 1] - 2.0 * y[j] + y[j + 1]); };

    // Not-a-knot at x_1 and x_{n-2} decouples the first and last interior
    // moments; the remaining ones solve a (1, 4, 1) tridiagonal system.
    m[1] = rhs(1) / 6.0;
    m[n - 2] = rhs(n - 2) / 6.0;
    if (n > 4) {
        const std::size_t lo = 2;
        const std::size_t hi = n - 3;
        const std::size_t k = hi - lo + 1;
        std::vector<double> cp(k, 0.0);
        std::vector<double> dp(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = lo + i;
            double d = rhs(j);
            if (j == lo)
                d -= m[1];
            if (j == hi)
                d -= m[n - 2];
            const double denom = 4.0 - (i > 0 ? cp[i - 1] : 0.0);
            cp[i] = 1.0 / denom;
            dp[i] = (d - (i > 0 ? dp[i - 1] : 0.0)) / denom;
        }
        m[hi] = dp[k - 1];
        for (std::size_t i = k - 1; i-- > 0;)
            m[lo + i] = dp[i] - cp[i] * m[lo + i + 1];
    }
    m[0] = 2.0 * m[1] - m[2];
    m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
    return m;
}

Surface::Surface(GridSpec grid, std::vector<double> values, InterpOrder order)
    : grid_(grid), order_(order)
{
    grid_.validate();
    rows_ = grid_.tau_count();
    cols_ = grid_.x_count();
    if (values.size() != rows_ * cols_)
        throw ValidationError("surface values do not match grid dimensions (" + std::to_string(values.size())
                              + " != " + std::to_string(rows_) + "x" + std::to_string(cols_) + ")");
    if (order_ != InterpOrder::Linear && order_ != InterpOrder::Cubic)
        throw ValidationError("interpolation order must be 1 or 3");
    values_ = std::move(values);
    if (cols_ < 2)
        throw ValidationError("surface needs at least two x-nodes");
    if (order_ == InterpOrder::Cubic) {
        moments_.resize(values_.size());
        for (std::size_t i = 0; i < rows_; ++i) {
            const auto m = not_a_knot_moments(row(i), grid_.d_x);
            std::copy(m.begin(), m.end(), moments_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
        }
    }
}

std::span<const double> Surface::moments(std::size_t i) const
{
    if (moments_.empty())
        return {};
    return {moments_.data() + i * cols_, cols_};
}

bool Surface::contains(double tau, double x) const
{
    const double tol_t = 1e-10 * (1.0 + std::abs(tau));
    const double tol_x = 1e-10 * (1.0 + std::abs(x));
    return tau >= grid_.tau_lo - tol_t && tau <= grid_.tau_last() + tol_t && x >= grid_.x_lo - tol_x
           && x <= grid_.x_last() + tol_x;
}

double Surface::clamp_x(double x) const
{
    return std::min(std::max(x, grid_.x_lo), grid_.x_last());
}

double Surface::eval_slice(std::size_t i, double x) const
{
    const double pos = snap_to_node(grid_.x_position(clamp_x(x)));
    std::size_t j = static_cast<std::size_t>(pos);
    if (j >= cols_ - 1)
        j = cols_ - 2;
    const double t = pos - static_cast<double>(j);
    const double* v = values_.data() + i * cols_;
    if (order_ == InterpOrder::Linear)
        return (1.0 - t) * v[j] + t * v[j + 1];
    const double* m = moments_.data() + i * cols_;
    return cubic_cell(v[j], v[j + 1], m[j], m[j + 1], grid_.d_x, t);
}

double Surface::eval(double tau, double x) const
{
    if (!contains(tau, x)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "surface query (tau=" << tau << ", x=" << x << ") outside [" << grid_.tau_lo << ", "
            << grid_.tau_last() << "] x [" << grid_.x_lo << ", " << grid_.x_last() << "]";
        throw NumericalError(msg.str());
    }
    if (rows_ == 1)
        return eval_slice(0, x);
    const double tc = std::min(std::max(tau, grid_.tau_lo), grid_.tau_last());
    const double pos = snap_to_node((tc - grid_.tau_lo) / grid_.d_tau);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= rows_ - 1)
        i = rows_ - 2;
    const double theta = pos - static_cast<double>(i);
    const double a = eval_slice(i, x);
    if (theta == 0.0)
        return a;
    return (1.0 - theta) * a + theta * eval_slice(i + 1, x);
}

DomainSchedule domain_schedule(const Interval& output, int iterations, double epsilon, double rho, double T)
{
    if (iterations < 1)
        throw ValidationError("domain schedule needs at least one iteration");
    if (!(epsilon > 0.0))
        throw ValidationError("truncation margin epsilon must be positive");
    if (!(output.lo < output.hi))
        throw ValidationError("output domain must be non-empty");
    if (!(T > 0.0))
        throw ValidationError("maturity must be positive");

    DomainSchedule s;
    s.epsilon = epsilon;
    s.left_margin = epsilon + (rho < 0.0 ? -rho * T : 0.0);
    s.right_margin = epsilon + (rho > 0.0 ? rho * T : 0.0);
    s.intervals.resize(static_cast<std::size_t>(iterations) + 1);
    for (int n = 0; n <= iterations; ++n) {
        const double remaining = iterations - n;
        s.intervals[n] = {output.lo - remaining * s.left_margin, output.hi + remaining * s.right_margin};
    }
    return s;
}

void write_surface_csv(std::ostream& os, const Surface& s)
{
    os << "tau,x,S,value\n";
    const auto& g = s.grid();
    for (std::size_t i = 0; i < s.rows(); ++i) {
        const std::string tau = fmt(g.tau(i));
        for (std::size_t j = 0; j < s.cols(); ++j) {
            const double x = g.x(j);
            os << tau << ',' << fmt(x) << ',' << fmt(std::exp(x)) << ',' << fmt(s.at(i, j)) << '\n';
        }
    }
}

}  // namespace xva
