#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace xva {

/// Rectangular (tau, x) node lattice. Nodes are tau_lo + i*d_tau and
/// x_lo + j*d_x; counts are floor(range/step) + 1 with a 1e-9 step
/// tolerance for representation error in the range. A lattice grid also
/// records its anchor so that node x_origin sits exactly on x_anchor and
/// nodes shared by nested lattices have bit-identical coordinates.
struct GridSpec {
    double tau_max = 0.0;
    double d_tau = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double d_x = 0.0;
    double tau_lo = 0.0;
    double x_anchor = 0.0;
    std::ptrdiff_t x_origin = -1;  // negative: unanchored

    std::size_t tau_count() const;
    std::size_t x_count() const;
    double tau(std::size_t i) const { return tau_lo + static_cast<double>(i) * d_tau; }
    double x(std::size_t j) const
    {
        if (x_origin < 0)
            return x_lo + static_cast<double>(j) * d_x;
        return x_anchor + static_cast<double>(static_cast<std::ptrdiff_t>(j) - x_origin) * d_x;
    }
    /// Fractional node index of x.
    double x_position(double x) const
    {
        if (x_origin < 0)
            return (x - x_lo) / d_x;
        return static_cast<double>(x_origin) + (x - x_anchor) / d_x;
    }
    /// Same lattice with `k` nodes dropped on the left.
    void drop_left(std::size_t k)
    {
        x_lo = x(k);
        if (x_origin >= 0)
            x_origin -= static_cast<std::ptrdiff_t>(k);
    }
    double tau_last() const { return tau(tau_count() - 1); }
    double x_last() const { return x(x_count() - 1); }

    void validate() const;
};

/// Closed log-price interval.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
};

/// Grid whose x-nodes lie on the lattice anchor + k*d_x and whose span
/// covers `span` (endpoints are pushed outward to the next lattice node).
GridSpec lattice_grid(const Interval& span, double anchor, double d_x, double tau_max, double d_tau);

enum class InterpOrder : int { Linear = 1, Cubic = 3 };

InterpOrder interp_order_from_int(int order);

/// Node values on a GridSpec plus the interpolant used between nodes:
/// per tau-slice piecewise-linear or not-a-knot cubic spline in x, linear in
/// tau between slices. Queries outside the grid throw NumericalError.
class Surface {
public:
    Surface(GridSpec grid, std::vector<double> values, InterpOrder order);

    template <class F>
    static Surface sample(const GridSpec& grid, F&& fn, InterpOrder order)
    {
        grid.validate();
        const std::size_t nt = grid.tau_count();
        const std::size_t nx = grid.x_count();
        std::vector<double> values(nt * nx);
        for (std::size_t i = 0; i < nt; ++i)
            for (std::size_t j = 0; j < nx; ++j)
                values[i * nx + j] = fn(grid.tau(i), grid.x(j));
        return Surface(grid, std::move(values), order);
    }

    const GridSpec& grid() const { return grid_; }
    InterpOrder order() const { return order_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    std::span<const double> values() const { return values_; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    /// Spline second derivatives of slice i (empty for linear surfaces).
    std::span<const double> moments(std::size_t i) const;

    bool contains(double tau, double x) const;
    double eval(double tau, double x) const;
    /// Spatial interpolant of slice i at x.
    double eval_slice(std::size_t i, double x) const;

private:
    double clamp_x(double x) const;

    GridSpec grid_;
    InterpOrder order_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
    std::vector<double> moments_;
};

/// Second derivatives of the not-a-knot cubic spline through equally spaced
/// samples. Requires at least four samples.
std::vector<double> not_a_knot_moments(std::span<const double> y, double h);

/// Rounds a fractional node index to the nearest node when it is within
/// 1e-9 of it, so queries at grid nodes return stored values exactly.
inline double snap_to_node(double pos)
{
    const double r = std::nearbyint(pos);
    return std::abs(pos - r) < 1e-9 ? r : pos;
}

/// Evaluates a piecewise cubic given node values and moments on cell
/// [x_j, x_j + h] at fraction t.
inline double cubic_cell(double y0, double y1, double m0, double m1, double h, double t)
{
    const double s = 1.0 - t;
    return s * y0 + t * y1 + (h * h / 6.0) * ((s * s * s - s) * m0 + (t * t * t - t) * m1);
}

/// Per-iteration log-price domains of the monotone scheme. intervals[n] is
/// the domain on which iterate n is stored; intervals[N] is the output
/// domain. Each step widens by epsilon on both sides plus |rho| T on the
/// side the drift shifts the convolution towards.
struct DomainSchedule {
    std::vector<Interval> intervals;
    double epsilon = 0.0;
    double left_margin = 0.0;
    double right_margin = 0.0;

    int iterations() const { return static_cast<int>(intervals.size()) - 1; }
};

DomainSchedule domain_schedule(const Interval& output, int iterations, double epsilon, double rho, double T);

/// Writes `tau,x,S,value` rows, tau-major, with 17 significant digits.
void write_surface_csv(std::ostream& os, const Surface& s);

}  // namespace xva
