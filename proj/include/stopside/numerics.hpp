#pragma once

#include <functional>
#include <span>
#include <vector>

#include "stopside/errors.hpp"

namespace stopside {

using ScalarFn = std::function<double(double)>;

/// Point mass of a speed measure.
struct Atom {
    double point;
    double mass;
};

/// Speed measure m(dx) = density(x) dx + sum of atoms.
///
/// `breakpoints` lists points where the density (or the scale derivative of
/// the owning diffusion) is not smooth; quadrature never straddles them.
struct SpeedMeasure {
    ScalarFn density;
    std::vector<Atom> atoms;
    std::vector<double> breakpoints;

    /// Mass of the atom sitting exactly at x, 0 if none.
    double atom_mass(double x) const;
    void validate() const;
};

/// Integration region between two extended reals. Infinite bounds are
/// represented by +-infinity; inclusion flags only matter for atoms.
struct RegionSpec {
    double lower;
    double upper;
    bool include_lower = false;
    bool include_upper = true;

    static RegionSpec closed(double a, double b) { return {a, b, true, true}; }
    static RegionSpec open(double a, double b) { return {a, b, false, false}; }
    static RegionSpec open_closed(double a, double b) { return {a, b, false, true}; }
    static RegionSpec closed_open(double a, double b) { return {a, b, true, false}; }

    bool contains(double x) const;
    void validate() const;
};

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    int max_doublings = 60;

    void validate() const;
};

/// Integral of f against m over the region.
///
/// The absolutely continuous part is integrated adaptively (Gauss-Kronrod
/// panels split at breakpoints and atoms). An unbounded end is handled by
/// doubling the truncation radius; the partial sums are Aitken-accelerated
/// when their increments decay geometrically, and iteration stops once two
/// successive values agree to max(rel_tol*|value|, abs_tol). An excluded
/// finite end where the integrand is not finite is approached the same way
/// with geometrically shrinking panels.
///
/// Throws DivergentIntegral when the truncated values keep growing and
/// NonConvergent when the doubling budget runs out.
double integrate_against_measure(const ScalarFn& f, const SpeedMeasure& m, const RegionSpec& region,
                                 const QuadratureOptions& opts = {},
                                 std::span<const double> extra_breakpoints = {});

/// Adaptive Gauss-Kronrod integral of f over the finite interval [a, b],
/// split at the given breakpoints.
double integrate_finite(const ScalarFn& f, double a, double b, const QuadratureOptions& opts = {},
                        std::span<const double> breakpoints = {});

struct RootOptions {
    int grid_points = 2048;
    int refinements = 2;
};

/// Evaluates a function on a whole grid at once; lets callers reuse work
/// between neighbouring nodes.
using GridEvaluator = std::function<std::vector<double>(const std::vector<double>&)>;

/// Largest sign change of h on [lo, hi].
///
/// Scans a uniform grid from hi downward for the first sign change (values
/// >= 0 count as non-negative) and bisects it to a bracket no wider than tol.
/// The grid is refined `refinements` times when no change is found. If h only
/// touches zero, the largest local minimiser of |h| with
/// |h| <= tol*(1 + max|h|) is returned. Otherwise throws NoRoot.
double find_largest_root(const ScalarFn& h, double lo, double hi, double tol,
                         const RootOptions& opts = {}, const GridEvaluator& batch = {});

enum class Side { Left, Right };

struct DerivativeEstimate {
    double value;
    double error;
};

/// Richardson-extrapolated one-sided difference quotient
/// (f(x+-h)-f(x)) / (coord(x+-h)-coord(x)) without convergence checks.
DerivativeEstimate one_sided_derivative_estimate(const ScalarFn& f, const ScalarFn& coord, double x,
                                                 Side side);

/// Same as one_sided_derivative_estimate but throws NonConvergent when the
/// extrapolation ladder does not settle.
double one_sided_derivative(const ScalarFn& f, const ScalarFn& coord, double x, Side side);

/// Polynomial (Neville) extrapolation of samples (t_i, y_i) to t = target.
double neville_extrapolate(std::span<const double> t, std::span<const double> y, double target);

}  // namespace stopside
