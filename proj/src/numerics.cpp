#include "stopside/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace stopside {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxSegments = 2000;

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Segment {
    double a;
    double b;
    double value;
    double error;
};

bool heap_less(const Segment& l, const Segment& r) { return l.error < r.error; }

Segment gk_segment(const ScalarFn& f, double a, double b)
{
    double err = 0.0;
    auto g = [&f](double x) { return f(x); };
    double v = GK::integrate(g, a, b, 0, 0.0, &err);
    if (!std::isfinite(v))
        throw Error(ErrorKind::DivergentIntegral,
                    "integrand not finite on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    // Boost reports the non-adaptive error on the reference interval [-1, 1].
    return {a, b, v, err * 0.5 * (b - a)};
}

// Globally adaptive Gauss-Kronrod on a single smooth piece.
double adaptive_piece(const ScalarFn& f, double a, double b, double rel, double abs_tol)
{
    std::vector<Segment> heap;
    heap.push_back(gk_segment(f, a, b));
    double total = heap.front().value;
    double err = heap.front().error;
    while (err > std::max(abs_tol, rel * std::abs(total)) && static_cast<int>(heap.size()) < kMaxSegments) {
        std::pop_heap(heap.begin(), heap.end(), heap_less);
        Segment top = heap.back();
        heap.pop_back();
        double mid = 0.5 * (top.a + top.b);
        if (!(mid > top.a && mid < top.b)) {
            top.error = 0.0;
            heap.push_back(top);
            std::push_heap(heap.begin(), heap.end(), heap_less);
        } else {
            Segment l = gk_segment(f, top.a, mid);
            Segment r = gk_segment(f, mid, top.b);
            heap.push_back(l);
            std::push_heap(heap.begin(), heap.end(), heap_less);
            heap.push_back(r);
            std::push_heap(heap.begin(), heap.end(), heap_less);
        }
        total = 0.0;
        err = 0.0;
        for (const auto& s : heap) {
            total += s.value;
            err += s.error;
        }
    }
    std::sort(heap.begin(), heap.end(), [](const Segment& l, const Segment& r) { return l.a < r.a; });
    total = 0.0;
    err = 0.0;
    for (const auto& s : heap) {
        total += s.value;
        err += s.error;
    }
    if (err > std::max(1e3 * abs_tol, 1e-3 * std::abs(total)))
        throw Error(ErrorKind::NonConvergent, "adaptive quadrature did not converge on [" + std::to_string(a)
                                                  + ", " + std::to_string(b) + "]");
    return total;
}

double finite_split(const ScalarFn& f, double a, double b, const QuadratureOptions& o,
                    const std::vector<double>& bps)
{
    if (!(a < b))
        return 0.0;
    double total = 0.0;
    double left = a;
    for (double p : bps) {
        if (p <= left || p >= b)
            continue;
        total += adaptive_piece(f, left, p, o.rel_tol, o.abs_tol);
        left = p;
    }
    total += adaptive_piece(f, left, b, o.rel_tol, o.abs_tol);
    return total;
}

// Sums panel(0) + panel(1) + ... where panels shrink (tails, singular ends).
// Aitken acceleration is applied while consecutive panel ratios look geometric.
double sum_panels(const std::function<double(int)>& panel, const QuadratureOptions& o)
{
    double sum = 0.0;
    double prev_d = 0.0;
    double prev_q = std::numeric_limits<double>::quiet_NaN();
    double prev_a = std::numeric_limits<double>::quiet_NaN();
    double prev_diff = kInf;
    double q = 0.0;
    int growth = 0;
    for (int n = 0; n <= o.max_doublings; ++n) {
        double d = panel(n);
        if (!std::isfinite(d))
            throw Error(ErrorKind::DivergentIntegral, "truncated integral is not finite");
        sum += d;
        double acc = sum;
        q = std::numeric_limits<double>::quiet_NaN();
        if (n >= 1 && prev_d != 0.0) {
            q = d / prev_d;
            if (n >= 2 && q > 0.0 && q < 0.95 && std::abs(q - prev_q) <= 0.1 * q + 1e-3)
                acc = sum + d * q / (1.0 - q);
        }
        if (n >= 1 && std::abs(d) >= 0.99 * std::abs(prev_d) && std::abs(d) > o.abs_tol)
            ++growth;
        else
            growth = 0;
        if (growth >= 8)
            throw Error(ErrorKind::DivergentIntegral, "truncated integrals keep growing");
        double diff = std::abs(acc - prev_a);
        double tol = std::max(o.rel_tol * std::abs(acc), o.abs_tol);
        if (n >= 4 && diff <= tol && prev_diff <= 10.0 * tol)
            return acc;
        prev_diff = n >= 1 ? diff : kInf;
        prev_a = acc;
        prev_d = d;
        prev_q = q;
    }
    if (std::isfinite(q) && q >= 0.9)
        throw Error(ErrorKind::DivergentIntegral, "tail increments do not decay");
    throw Error(ErrorKind::NonConvergent, "doubling budget exhausted before the tail stabilized");
}

bool endpoint_singular(const ScalarFn& integrand, double x)
{
    try {
        return !std::isfinite(integrand(x));
    } catch (const Error&) {
        return true;
    }
}

double finite_with_ends(const ScalarFn& f, double a, double b, bool sing_a, bool sing_b,
                        const QuadratureOptions& o, const std::vector<double>& bps)
{
    if (sing_a && sing_b) {
        double mid = 0.5 * (a + b);
        return finite_with_ends(f, a, mid, true, false, o, bps) + finite_with_ends(f, mid, b, false, true, o, bps);
    }
    double d = b - a;
    if (sing_a) {
        return sum_panels(
            [&](int n) { return finite_split(f, a + d * std::ldexp(1.0, -n - 1), a + d * std::ldexp(1.0, -n), o, bps); },
            o);
    }
    if (sing_b) {
        return sum_panels(
            [&](int n) { return finite_split(f, b - d * std::ldexp(1.0, -n), b - d * std::ldexp(1.0, -n - 1), o, bps); },
            o);
    }
    return finite_split(f, a, b, o, bps);
}

double upper_tail(const ScalarFn& f, double a, bool sing_a, const QuadratureOptions& o,
                  const std::vector<double>& bps)
{
    double len = std::max(1.0, std::abs(a));
    return sum_panels(
        [&](int n) {
            double lo = n == 0 ? a : a + len * std::ldexp(1.0, n - 1);
            double hi = a + len * std::ldexp(1.0, n);
            return finite_with_ends(f, lo, hi, n == 0 && sing_a, false, o, bps);
        },
        o);
}

double lower_tail(const ScalarFn& f, double b, bool sing_b, const QuadratureOptions& o,
                  const std::vector<double>& bps)
{
    double len = std::max(1.0, std::abs(b));
    return sum_panels(
        [&](int n) {
            double hi = n == 0 ? b : b - len * std::ldexp(1.0, n - 1);
            double lo = b - len * std::ldexp(1.0, n);
            return finite_with_ends(f, lo, hi, false, n == 0 && sing_b, o, bps);
        },
        o);
}

}  // namespace

double SpeedMeasure::atom_mass(double x) const
{
    for (const auto& a : atoms)
        if (a.point == x)
            return a.mass;
    return 0.0;
}

void SpeedMeasure::validate() const
{
    if (!density)
        throw Error(ErrorKind::InvalidArgument, "speed measure has no density");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i].mass > 0.0) || !std::isfinite(atoms[i].mass))
            throw Error(ErrorKind::InvalidArgument, "speed atom mass must be positive and finite");
        if (!std::isfinite(atoms[i].point))
            throw Error(ErrorKind::InvalidArgument, "speed atom point must be finite");
        for (std::size_t j = 0; j < i; ++j)
            if (atoms[j].point == atoms[i].point)
                throw Error(ErrorKind::InvalidArgument, "speed atoms must be at distinct points");
    }
}

bool RegionSpec::contains(double x) const
{
    bool above = x > lower || (include_lower && x == lower);
    bool below = x < upper || (include_upper && x == upper);
    return above && below;
}

void RegionSpec::validate() const
{
    if (!(lower < upper))
        throw Error(ErrorKind::InvalidArgument, "region requires lower < upper");
}

void QuadratureOptions::validate() const
{
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || max_doublings < 1)
        throw Error(ErrorKind::InvalidArgument, "quadrature options out of range");
}

double integrate_finite(const ScalarFn& f, double a, double b, const QuadratureOptions& opts,
                        std::span<const double> breakpoints)
{
    opts.validate();
    if (!std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorKind::InvalidArgument, "integrate_finite needs finite limits");
    if (a == b)
        return 0.0;
    if (a > b)
        return -integrate_finite(f, b, a, opts, breakpoints);
    std::vector<double> bps(breakpoints.begin(), breakpoints.end());
    std::sort(bps.begin(), bps.end());
    return finite_split(f, a, b, opts, bps);
}

double integrate_against_measure(const ScalarFn& f, const SpeedMeasure& m, const RegionSpec& region,
                                 const QuadratureOptions& opts, std::span<const double> extra_breakpoints)
{
    region.validate();
    opts.validate();
    m.validate();

    std::vector<double> bps(m.breakpoints.begin(), m.breakpoints.end());
    for (const auto& a : m.atoms)
        bps.push_back(a.point);
    bps.insert(bps.end(), extra_breakpoints.begin(), extra_breakpoints.end());
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

    double total = 0.0;
    for (const auto& a : m.atoms) {
        if (region.contains(a.point)) {
            double v = f(a.point);
            if (!std::isfinite(v))
                throw Error(ErrorKind::DivergentIntegral, "integrand not finite at a speed atom");
            total += v * a.mass;
        }
    }

    ScalarFn integrand = [&](double y) {
        double d = m.density(y);
        if (d == 0.0)
            return 0.0;
        return f(y) * d;
    };

    double lo = region.lower;
    double hi = region.upper;
    bool lo_fin = std::isfinite(lo);
    bool hi_fin = std::isfinite(hi);
    bool sing_lo = lo_fin && endpoint_singular(integrand, lo);
    bool sing_hi = hi_fin && endpoint_singular(integrand, hi);

    if (lo_fin && hi_fin) {
        total += finite_with_ends(integrand, lo, hi, sing_lo, sing_hi, opts, bps);
    } else if (lo_fin) {
        total += upper_tail(integrand, lo, sing_lo, opts, bps);
    } else if (hi_fin) {
        total += lower_tail(integrand, hi, sing_hi, opts, bps);
    } else {
        double c = bps.empty() ? 0.0 : bps[bps.size() / 2];
        total += lower_tail(integrand, c, false, opts, bps) + upper_tail(integrand, c, false, opts, bps);
    }
    return total;
}

namespace {

double bisect(const ScalarFn& h, double a, double b, bool a_negative, double tol)
{
    while (b - a > tol) {
        double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b))
            break;
        if ((h(mid) < 0.0) == a_negative)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

}  // namespace

double find_largest_root(const ScalarFn& h, double lo, double hi, double tol, const RootOptions& opts,
                         const GridEvaluator& batch)
{
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorKind::InvalidArgument, "root search needs finite lo < hi");
    if (!(tol > 0.0))
        throw Error(ErrorKind::InvalidArgument, "root tolerance must be positive");
    if (opts.grid_points < 2 || opts.refinements < 0)
        throw Error(ErrorKind::InvalidArgument, "root grid options out of range");

    std::vector<double> xs;
    std::vector<double> vs;
    for (int level = 0; level <= opts.refinements; ++level) {
        int n = opts.grid_points << level;
        xs.resize(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i)
            xs[i] = lo + (hi - lo) * static_cast<double>(i) / n;
        xs[n] = hi;
        if (batch) {
            vs = batch(xs);
            if (vs.size() != xs.size())
                throw Error(ErrorKind::InvalidArgument, "grid evaluator returned wrong size");
        } else {
            vs.resize(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i)
                vs[i] = h(xs[i]);
        }
        for (int i = n - 1; i >= 0; --i) {
            bool neg_lo = vs[i] < 0.0;
            bool neg_hi = vs[i + 1] < 0.0;
            if (neg_lo != neg_hi)
                return bisect(h, xs[i], xs[i + 1], neg_lo, tol);
        }
    }

    double scale = 0.0;
    for (double v : vs)
        if (std::isfinite(v))
            scale = std::max(scale, std::abs(v));
    double thr = tol * (1.0 + scale);
    int n = static_cast<int>(xs.size()) - 1;
    auto absh = [&](double x) { return std::abs(h(x)); };
    for (int i = n; i >= 0; --i) {
        double v = std::abs(vs[i]);
        if (!std::isfinite(v))
            continue;
        bool local_min = (i == n || v <= std::abs(vs[i + 1])) && (i == 0 || v <= std::abs(vs[i - 1]));
        if (!local_min)
            continue;
        if (v <= thr)
            return xs[i];
        double a = xs[std::max(i - 1, 0)];
        double b = xs[std::min(i + 1, n)];
        auto r = boost::math::tools::brent_find_minima(absh, a, b, std::numeric_limits<double>::digits / 2);
        if (r.second <= thr)
            return r.first;
    }
    throw Error(ErrorKind::NoRoot, "no sign change or tangential zero of the residual on the search window");
}

DerivativeEstimate one_sided_derivative_estimate(const ScalarFn& f, const ScalarFn& coord, double x, Side side)
{
    constexpr int kLevels = 10;
    const double h0 = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x));
    const double sgn = side == Side::Right ? 1.0 : -1.0;
    const double fx = f(x);
    const double cx = coord(x);
    double t[kLevels][kLevels];
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_err = kInf;
    for (int k = 0; k < kLevels; ++k) {
        double h = std::ldexp(h0, -k);
        double xh = x + sgn * h;
        t[k][0] = (f(xh) - fx) / (coord(xh) - cx);
        if (k == 0) {
            best = t[0][0];
            continue;
        }
        for (int j = 1; j <= k; ++j) {
            double fac = std::ldexp(1.0, j) - 1.0;
            t[k][j] = t[k][j - 1] + (t[k][j - 1] - t[k - 1][j - 1]) / fac;
            double err = std::max(std::abs(t[k][j] - t[k][j - 1]), std::abs(t[k][j] - t[k - 1][j - 1]));
            if (err <= best_err) {
                best_err = err;
                best = t[k][j];
            }
        }
        if (std::abs(t[k][k] - t[k - 1][k - 1]) >= 2.0 * best_err)
            break;
    }
    return {best, best_err};
}

double one_sided_derivative(const ScalarFn& f, const ScalarFn& coord, double x, Side side)
{
    auto est = one_sided_derivative_estimate(f, coord, x, side);
    if (!std::isfinite(est.value) || !(est.error <= 1e-6 * std::max(1.0, std::abs(est.value))))
        throw Error(ErrorKind::NonConvergent, "one-sided derivative did not stabilize at x=" + std::to_string(x));
    return est.value;
}

double neville_extrapolate(std::span<const double> t, std::span<const double> y, double target)
{
    if (t.size() != y.size() || t.empty())
        throw Error(ErrorKind::InvalidArgument, "extrapolation needs matching non-empty samples");
    std::vector<double> p(y.begin(), y.end());
    const std::size_t n = p.size();
    for (std::size_t m = 1; m < n; ++m)
        for (std::size_t i = 0; i + m < n; ++i)
            p[i] = ((target - t[i + m]) * p[i] + (t[i] - target) * p[i + 1]) / (t[i] - t[i + m]);
    return p[0];
}

}  // namespace stopside
