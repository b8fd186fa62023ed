#include "stopside/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

namespace stopside {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const ScalarFn& f, double x)
{
    try {
        return f(x);
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// Second-order Feller quotient over the cell (x-h/2, x+h/2].
double feller_quotient(const Diffusion& d, const ScalarFn& f, double x, double fx, double h)
{
    const auto& s = d.scale().value;
    double s0 = s(x);
    double up = (f(x + h) - fx) / (s(x + h) - s0);
    double dn = (fx - f(x - h)) / (s0 - s(x - h));
    auto dens = [&d](double y) { return d.speed().density(y); };
    double mass = boost::math::quadrature::gauss<double, 7>::integrate(dens, x - 0.5 * h, x + 0.5 * h);
    return (up - dn) / mass;
}

double generator_direct(const Diffusion& d, const ScalarFn& f, double x, double h0)
{
    constexpr int kLevels = 6;
    double fx = f(x);
    double t[kLevels][kLevels];
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_err = kInf;
    for (int k = 0; k < kLevels; ++k) {
        t[k][0] = feller_quotient(d, f, x, fx, std::ldexp(h0, -k));
        if (k == 0) {
            best = t[0][0];
            continue;
        }
        for (int j = 1; j <= k; ++j) {
            t[k][j] = t[k][j - 1] + (t[k][j - 1] - t[k - 1][j - 1]) / (std::ldexp(1.0, j) - 1.0);
            double err = std::max(std::abs(t[k][j] - t[k][j - 1]), std::abs(t[k][j] - t[k - 1][j - 1]));
            if (err <= best_err) {
                best_err = err;
                best = t[k][j];
            }
        }
        if (std::abs(t[k][k] - t[k - 1][k - 1]) >= 2.0 * best_err)
            break;
    }
    if (!std::isfinite(best) || best_err > 1e-4 * std::max(1.0, std::abs(best)))
        throw Error(ErrorKind::NonConvergent, "generator difference quotient did not stabilize at x=" + std::to_string(x));
    return best;
}

double nearest_distance(const std::vector<double>& barriers, double x, double sgn)
{
    double best = kInf;
    for (double b : barriers) {
        double delta = (b - x) * sgn;
        if (delta > 0.0)
            best = std::min(best, delta);
    }
    return best;
}

}  // namespace

bool StateInterval::contains(double x) const
{
    if (std::isnan(x))
        return false;
    bool above = x > left || (left_in_state && x == left);
    bool below = x < right || (right_in_state && x == right);
    return above && below;
}

void StateInterval::validate() const
{
    if (!(left < right))
        throw Error(ErrorKind::InvalidArgument, "state interval requires left < right");
    if (left_in_state != (left_behavior == Boundary::Reflecting))
        throw Error(ErrorKind::InvalidArgument, "an included boundary must be reflecting and an excluded one natural");
    if (right_in_state != (right_behavior == Boundary::Reflecting))
        throw Error(ErrorKind::InvalidArgument, "an included boundary must be reflecting and an excluded one natural");
    if ((left_in_state && !std::isfinite(left)) || (right_in_state && !std::isfinite(right)))
        throw Error(ErrorKind::InvalidArgument, "infinite boundaries cannot belong to the state space");
}

Diffusion::Diffusion(Parts parts) : parts_(std::move(parts))
{
    parts_.interval.validate();
    parts_.speed.validate();
    if (!parts_.scale.value || !parts_.scale.derivative_right || !parts_.scale.derivative_left)
        throw Error(ErrorKind::InvalidArgument, "scale function is incomplete");
    if (!parts_.pair)
        throw Error(ErrorKind::InvalidArgument, "diffusion has no fundamental pair factory");
    for (const auto& a : parts_.speed.atoms)
        if (!parts_.interval.contains(a.point))
            throw Error(ErrorKind::InvalidArgument, "speed atom outside the state interval");

    const auto& iv = parts_.interval;
    double lo = -1.0;
    double hi = 2.0;
    if (std::isfinite(iv.left) && std::isfinite(iv.right)) {
        lo = iv.left;
        hi = iv.right;
    } else if (std::isfinite(iv.left)) {
        lo = iv.left;
        hi = iv.left + 2.0;
    } else if (std::isfinite(iv.right)) {
        lo = iv.right - 2.0;
        hi = iv.right;
    }
    double ref = 0.5 * (lo + hi);
    double slo = safe_eval(parts_.scale.value, lo);
    double shi = safe_eval(parts_.scale.value, hi);
    if (parts_.scale.inverse && std::isfinite(slo) && std::isfinite(shi)) {
        double cand = safe_eval(parts_.scale.inverse, 0.5 * (slo + shi));
        if (std::isfinite(cand) && cand > lo && cand < hi)
            ref = cand;
    }
    auto sing = singular_points();
    if (std::find(sing.begin(), sing.end(), ref) != sing.end())
        ref += 0.125 * (hi - lo);
    reference_ = ref;
}

double Diffusion::reference_point() const { return reference_; }

FundamentalPair Diffusion::fundamental_pair_for(double alpha) const
{
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw Error(ErrorKind::ParameterOutOfRange, "discount alpha must be positive");
    FundamentalPair p = parts_.pair(alpha);
    double x = reference_;
    double w = p.psi_ds_right(x) * p.phi(x) - p.psi(x) * p.phi_ds_right(x);
    if (!(w > 0.0) || !std::isfinite(w))
        throw Error(ErrorKind::HypothesisViolated, "Wronskian is not positive");
    p.wronskian = w;
    return p;
}

std::vector<double> Diffusion::singular_points() const
{
    std::vector<double> pts(parts_.scale.kinks.begin(), parts_.scale.kinks.end());
    for (const auto& a : parts_.speed.atoms)
        pts.push_back(a.point);
    pts.insert(pts.end(), parts_.speed.breakpoints.begin(), parts_.speed.breakpoints.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

void Diffusion::require_in_state(double x, const char* what) const
{
    if (!parts_.interval.contains(x))
        throw Error(ErrorKind::OutOfDomain, std::string(what) + "=" + std::to_string(x) + " is outside the state interval");
}

double green(const FundamentalPair& pair, double x, double y)
{
    double lo = std::min(x, y);
    double hi = std::max(x, y);
    return pair.psi(lo) * pair.phi(hi) / pair.wronskian;
}

double green(const Diffusion& d, double alpha, double x, double y)
{
    d.require_in_state(x, "x");
    d.require_in_state(y, "y");
    return green(d.fundamental_pair_for(alpha), x, y);
}

double hitting_laplace(const Diffusion& d, double alpha, double x, double z)
{
    d.require_in_state(x, "x");
    d.require_in_state(z, "z");
    auto p = d.fundamental_pair_for(alpha);
    if (x == z)
        return 1.0;
    return x < z ? p.psi(x) / p.psi(z) : p.phi(x) / p.phi(z);
}

namespace {

std::vector<double> generator_barriers(const Diffusion& d, std::span<const double> barriers)
{
    const auto& iv = d.interval();
    std::vector<double> bars = d.singular_points();
    bars.insert(bars.end(), barriers.begin(), barriers.end());
    if (std::isfinite(iv.left))
        bars.push_back(iv.left);
    if (std::isfinite(iv.right))
        bars.push_back(iv.right);
    return bars;
}

double generator_at_safe_point(const Diffusion& d, const ScalarFn& f, double y, const std::vector<double>& bars,
                               double scale)
{
    double dist = std::min(nearest_distance(bars, y, 1.0), nearest_distance(bars, y, -1.0));
    return generator_direct(d, f, y, std::min(1e-2 * scale, 0.5 * dist));
}

// Cubic extrapolation to x of generator values sampled on one side only.
double generator_extrapolate(const Diffusion& d, const ScalarFn& f, double x, double sgn,
                             const std::vector<double>& bars)
{
    const double scale = std::max(1.0, std::abs(x));
    double room = nearest_distance(bars, x, sgn);
    double step = std::min(1e-3 * scale, room / 24.0);
    double ts[4];
    double ys[4];
    for (int j = 0; j < 4; ++j) {
        ts[j] = (4.0 + 2.0 * j) * step;
        ys[j] = generator_at_safe_point(d, f, x + sgn * ts[j], bars, scale);
    }
    return neville_extrapolate(ts, ys, 0.0);
}

}  // namespace

double generator_limit(const Diffusion& d, const ScalarFn& f, double x, Side side, std::span<const double> barriers)
{
    auto bars = generator_barriers(d, barriers);
    return generator_extrapolate(d, f, x, side == Side::Right ? 1.0 : -1.0, bars);
}

double apply_generator(const Diffusion& d, const ScalarFn& f, double x, std::span<const double> barriers)
{
    d.require_in_state(x, "x");
    const auto& iv = d.interval();
    auto bars = generator_barriers(d, barriers);
    const double scale = std::max(1.0, std::abs(x));
    const double hs = 1e-3 * scale;

    if (iv.left_in_state && x == iv.left)
        return generator_extrapolate(d, f, x, 1.0, bars);
    if (iv.right_in_state && x == iv.right)
        return generator_extrapolate(d, f, x, -1.0, bars);

    double mass = d.speed().atom_mass(x);
    if (mass > 0.0) {
        const auto& s = d.scale().value;
        double up = one_sided_derivative(f, s, x, Side::Right);
        double dn = one_sided_derivative(f, s, x, Side::Left);
        return (up - dn) / mass;
    }
    if (std::find(bars.begin(), bars.end(), x) != bars.end())
        return generator_extrapolate(d, f, x, 1.0, bars);

    double dist_up = nearest_distance(bars, x, 1.0);
    double dist_dn = nearest_distance(bars, x, -1.0);
    double dist = std::min(dist_up, dist_dn);
    if (dist >= 4.0 * hs)
        return generator_direct(d, f, x, std::min(1e-2 * scale, 0.5 * dist));
    return generator_extrapolate(d, f, x, dist_up >= dist_dn ? 1.0 : -1.0, bars);
}

double resolvent(const Diffusion& d, double alpha, const ScalarFn& u, double x, const QuadratureOptions& opts,
                 std::span<const double> breakpoints)
{
    d.require_in_state(x, "x");
    auto p = d.fundamental_pair_for(alpha);
    const auto& iv = d.interval();
    const auto& m = d.speed();

    double lower = 0.0;
    if (x > iv.left) {
        lower = integrate_against_measure([&](double y) { return p.psi(y) * u(y); }, m,
                                          RegionSpec{iv.left, x, iv.left_in_state, true}, opts, breakpoints);
    } else {
        lower = p.psi(x) * u(x) * m.atom_mass(x);
    }
    double upper = 0.0;
    if (x < iv.right) {
        upper = integrate_against_measure([&](double y) { return p.phi(y) * u(y); }, m,
                                          RegionSpec{x, iv.right, false, iv.right_in_state}, opts, breakpoints);
    }
    return (p.phi(x) * lower + p.psi(x) * upper) / p.wronskian;
}

Diffusion reflect(const Diffusion& d)
{
    const auto& src = d.parts();
    Diffusion::Parts out;
    out.name = "reflect(" + src.name + ")";
    out.interval = StateInterval{-src.interval.right,         -src.interval.left,
                                 src.interval.right_in_state, src.interval.left_in_state,
                                 src.interval.right_behavior, src.interval.left_behavior};

    auto sc = src.scale;
    out.scale.value = [sc](double x) { return -sc.value(-x); };
    out.scale.derivative_right = [sc](double x) { return sc.derivative_left(-x); };
    out.scale.derivative_left = [sc](double x) { return sc.derivative_right(-x); };
    if (sc.inverse)
        out.scale.inverse = [sc](double u) { return -sc.inverse(-u); };
    for (double k : sc.kinks)
        out.scale.kinks.push_back(-k);

    auto sp = src.speed;
    out.speed.density = [sp](double x) { return sp.density(-x); };
    for (const auto& a : sp.atoms)
        out.speed.atoms.push_back({-a.point, a.mass});
    for (double b : sp.breakpoints)
        out.speed.breakpoints.push_back(-b);

    auto factory = src.pair;
    out.pair = [factory](double alpha) {
        FundamentalPair p = factory(alpha);
        FundamentalPair r;
        r.psi = [p](double x) { return p.phi(-x); };
        r.phi = [p](double x) { return p.psi(-x); };
        r.psi_ds_right = [p](double x) { return -p.phi_ds_left(-x); };
        r.psi_ds_left = [p](double x) { return -p.phi_ds_right(-x); };
        r.phi_ds_right = [p](double x) { return -p.psi_ds_left(-x); };
        r.phi_ds_left = [p](double x) { return -p.psi_ds_right(-x); };
        r.wronskian = p.wronskian;
        return r;
    };

    if (src.coefficients) {
        auto c = *src.coefficients;
        out.coefficients = LocalCoefficients{[c](double x) { return c.variance(-x); },
                                             [c](double x) { return -c.drift(-x); }};
    }
    if (src.walker) {
        auto w = src.walker;
        out.walker = [w](double x, double z, double alpha, Rng& rng) {
            auto step = w(-x, -z, alpha, rng);
            return WalkStep{-step.next, step.weight};
        };
    }
    if (src.sampler) {
        auto s = src.sampler;
        out.sampler = [s](double x, double t, Rng& rng) { return -s(-x, t, rng); };
    }
    return Diffusion(std::move(out));
}

}  // namespace stopside
