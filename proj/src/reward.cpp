#include "stopside/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stopside {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_eval(const ScalarFn& f, double x)
{
    try {
        return f(x);
    } catch (const Error&) {
        return kNaN;
    }
}

bool is_listed(const std::vector<double>& pts, double x)
{
    return std::find(pts.begin(), pts.end(), x) != pts.end();
}

// Smooth-part value of L g from g', g'' and the local coefficients.
std::optional<double> analytic_generator(const Diffusion& d, const Reward& rw, double y)
{
    if (!rw.dg || !rw.d2g || !d.coefficients())
        return std::nullopt;
    const auto& c = *d.coefficients();
    return 0.5 * c.variance(y) * rw.d2g(y) + c.drift(y) * rw.dg(y);
}

// Whether g satisfies the local domain condition of the generator at p.
bool glues_at(const Diffusion& d, const Reward& rw, double p)
{
    const auto& s = d.scale().value;
    double up = one_sided_derivative_estimate(rw.g, s, p, Side::Right).value;
    double dn = one_sided_derivative_estimate(rw.g, s, p, Side::Left).value;
    double jump = up - dn;
    double mass = d.speed().atom_mass(p);
    if (mass == 0.0)
        return std::abs(jump) <= 1e-6 * (1.0 + std::abs(up) + std::abs(dn));
    double lim;
    if (auto a = analytic_generator(d, rw, p))
        lim = *a;
    else
        lim = generator_limit(d, rw.g, p, Side::Right, rw.kinks);
    return std::abs(jump - mass * lim) <= 1e-5 * (1.0 + std::abs(jump) + std::abs(mass * lim));
}

struct Blend {
    double x1;
    double s1;
    double g0;
    double slope;
    double len;

    double value(double u) const
    {
        if (u <= -len)
            return g0 - slope * len / 3.0;
        double v = 1.0 + u / len;
        return g0 + slope * len / 3.0 * (v * v * v - 1.0);
    }
    double second(double u) const
    {
        if (u <= -len)
            return 0.0;
        return 2.0 * slope / len * (1.0 + u / len);
    }
};

Blend make_blend(const Diffusion& d, const Reward& rw, double x1)
{
    const auto& s = d.scale().value;
    double s1 = s(x1);
    double len = 1.0;
    double left = d.interval().left;
    if (std::isfinite(left)) {
        double sl = safe_eval(s, left);
        if (std::isfinite(sl) && sl < s1)
            len = 0.5 * (s1 - sl);
    }
    double slope = one_sided_derivative_estimate(rw.g, s, x1, Side::Right).value;
    return Blend{x1, s1, rw.g(x1), slope, len};
}

}  // namespace

void Reward::check_nonnegative(double lo, double hi, int samples) const
{
    if (!g)
        throw Error(ErrorKind::InvalidArgument, "reward has no payoff function");
    for (int i = 0; i < samples; ++i) {
        double x = lo + (hi - lo) * i / (samples - 1);
        double v = safe_eval(g, x);
        if (std::isfinite(v) && v < 0.0) {
            std::ostringstream os;
            os << "reward is negative at x=" << x << " (g=" << v << ")";
            throw Error(ErrorKind::NegativeReward, os.str());
        }
    }
}

double generator_image(const Diffusion& d, const Reward& rw, double alpha, double y)
{
    d.require_in_state(y, "y");
    if (rw.generator_image_closed_form)
        return rw.generator_image_closed_form(alpha, y);
    double mass = d.speed().atom_mass(y);
    if (mass == 0.0 && !is_listed(rw.kinks, y)) {
        if (auto a = analytic_generator(d, rw, y))
            return alpha * rw.g(y) - *a;
    }
    return alpha * rw.g(y) - apply_generator(d, rw.g, y, rw.kinks);
}

std::optional<double> sampled_support_left(const ScalarFn& g, double lo, double hi, int samples)
{
    std::vector<double> xs(samples);
    int last_nonpos = -1;
    for (int i = 0; i < samples; ++i) {
        xs[i] = lo + (hi - lo) * i / (samples - 1);
        if (!(safe_eval(g, xs[i]) > 0.0))
            last_nonpos = i;
    }
    if (last_nonpos < 0)
        return std::nullopt;
    if (last_nonpos == samples - 1)
        return hi;
    double a = xs[last_nonpos];
    double b = xs[last_nonpos + 1];
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b))
            break;
        if (safe_eval(g, mid) > 0.0)
            b = mid;
        else
            a = mid;
    }
    return a;
}

double default_rrc_point(const Diffusion& d, const Reward& rw)
{
    const auto& iv = d.interval();
    if (rw.rrc_point) {
        d.require_in_state(*rw.rrc_point, "rrc_point");
        return *rw.rrc_point;
    }
    const double eps = 1e-6;
    double lo = std::isfinite(iv.left) ? iv.left : -10.0;
    double hi = std::isfinite(iv.right) ? iv.right : std::max(10.0, lo + 20.0);
    double x1;
    std::optional<double> edge = rw.support_left;
    if (!edge) {
        double slo = iv.left_in_state || !std::isfinite(iv.left) ? lo : lo + eps * std::max(1.0, std::abs(lo));
        double shi = iv.right_in_state || !std::isfinite(iv.right) ? hi : hi - eps * std::max(1.0, std::abs(hi));
        edge = sampled_support_left(rw.g, slo, shi);
    }
    x1 = edge ? *edge : lo;
    if (x1 < iv.left)
        x1 = iv.left;
    if (!iv.contains(x1))
        x1 = iv.left + eps * std::max(1.0, std::abs(iv.left));

    if (iv.left_in_state && x1 == iv.left && d.speed().atom_mass(x1) == 0.0) {
        double slope = one_sided_derivative_estimate(rw.g, d.scale().value, x1, Side::Right).value;
        if (std::abs(slope) > 1e-8 * (1.0 + std::abs(rw.g(x1))))
            x1 = iv.left + eps * std::max(1.0, std::abs(iv.left));
    }

    std::vector<double> cand = d.singular_points();
    cand.insert(cand.end(), rw.kinks.begin(), rw.kinks.end());
    std::sort(cand.begin(), cand.end(), std::greater<>());
    for (double p : cand) {
        if (!(p > x1) || !iv.contains(p) || p == iv.right)
            continue;
        if (!glues_at(d, rw, p))
            return p;
    }
    return x1;
}

ScalarFn default_extension(const Diffusion& d, const Reward& rw, double x1)
{
    Blend b = make_blend(d, rw, x1);
    auto s = d.scale().value;
    auto g = rw.g;
    return [b, s, g](double y) { return y >= b.x1 ? g(y) : b.value(s(y) - b.s1); };
}

ScalarFn extension_generator_image(const Diffusion& d, const Reward& rw, double alpha, double x1)
{
    Blend b = make_blend(d, rw, x1);
    return [b, d, rw, alpha](double y) {
        if (y >= b.x1)
            return generator_image(d, rw, alpha, y);
        double u = d.scale().value(y) - b.s1;
        double v = b.value(u);
        if (d.speed().atom_mass(y) > 0.0)
            return alpha * v;
        double lg = b.second(u) * d.scale().derivative_right(y) / d.speed().density(y);
        return alpha * v - lg;
    };
}

RrcReport check_rrc(const Diffusion& d, const Reward& rw, double alpha, double x1)
{
    d.require_in_state(x1, "x1");
    RrcReport rep;
    std::ostringstream details;
    const auto& iv = d.interval();
    auto pair = d.fundamental_pair_for(alpha);

    QuadratureOptions q;
    q.rel_tol = 1e-6;
    q.abs_tol = 1e-12;
    auto img = extension_generator_image(d, rw, alpha, x1);
    std::vector<double> bps = rw.kinks;
    bps.push_back(x1);
    try {
        double lower = 0.0;
        if (x1 > iv.left)
            lower = integrate_against_measure([&](double y) { return pair.psi(y) * std::abs(img(y)); }, d.speed(),
                                              RegionSpec{iv.left, x1, iv.left_in_state, true}, q, bps);
        double upper = 0.0;
        if (x1 < iv.right)
            upper = integrate_against_measure([&](double y) { return pair.phi(y) * std::abs(img(y)); }, d.speed(),
                                              RegionSpec{x1, iv.right, false, iv.right_in_state}, q, bps);
        double total = (pair.phi(x1) * lower + pair.psi(x1) * upper) / pair.wronskian;
        rep.integrability_ok = std::isfinite(total);
        details << "integral of G|(alpha-L)g~| at x0=" << x1 << " is " << total << "; ";
    } catch (const Error& e) {
        if (!e.is_numeric())
            throw;
        rep.integrability_ok = false;
        details << "integrability probe failed: " << e.what() << "; ";
    }

    if (iv.right_in_state) {
        rep.limit_ok = true;
        rep.limit_estimate = 0.0;
        details << "right end belongs to the state space, no limit condition";
    } else {
        std::vector<double> ratios;
        ScalarFn gt = rw.extension ? rw.extension : rw.g;
        for (int n = 0; n < 1100; ++n) {
            double z;
            if (std::isfinite(iv.right))
                z = iv.right - (iv.right - x1) * std::ldexp(1.0, -n - 1);
            else
                z = x1 + std::max(1.0, std::abs(x1)) * std::ldexp(1.0, n);
            if (!(z < iv.right) || !std::isfinite(z))
                break;
            double r = safe_eval(gt, z) / safe_eval(pair.psi, z);
            if (!std::isfinite(r))
                break;
            ratios.push_back(std::abs(r));
            if (ratios.size() >= 4 && ratios.back() == 0.0)
                break;
        }
        std::size_t n = ratios.size();
        if (n >= 4) {
            bool decreasing = ratios[n - 1] < ratios[n - 2] && ratios[n - 2] < ratios[n - 3]
                && ratios[n - 3] < ratios[n - 4];
            rep.limit_estimate = ratios[n - 1];
            rep.limit_ok = decreasing && ratios[n - 1] < 1e-6 * ratios[0];
            if (!rep.limit_ok && ratios[0] == 0.0 && ratios[n - 1] == 0.0) {
                rep.limit_ok = true;
            }
        } else {
            rep.limit_estimate = n ? ratios.back() : kNaN;
            rep.limit_ok = false;
        }
        details << "g/psi toward the right end: " << (n ? ratios.front() : kNaN) << " -> " << rep.limit_estimate
                << " over " << n << " points";
    }
    rep.details = details.str();
    return rep;
}

Reward reflect_reward(const Reward& rw)
{
    Reward out;
    out.description = "reflect(" + rw.description + ")";
    auto g = rw.g;
    out.g = [g](double x) { return g(-x); };
    if (rw.dg) {
        auto dg = rw.dg;
        out.dg = [dg](double x) { return -dg(-x); };
    }
    if (rw.d2g) {
        auto d2g = rw.d2g;
        out.d2g = [d2g](double x) { return d2g(-x); };
    }
    if (rw.generator_image_closed_form) {
        auto cf = rw.generator_image_closed_form;
        out.generator_image_closed_form = [cf](double alpha, double y) { return cf(alpha, -y); };
    }
    for (double k : rw.kinks)
        out.kinks.push_back(-k);
    std::sort(out.kinks.begin(), out.kinks.end());
    if (rw.rrc_point)
        out.rrc_point = -*rw.rrc_point;
    return out;
}

Reward scale_reward(const Reward& rw, double c)
{
    if (!(c > 0.0))
        throw Error(ErrorKind::InvalidArgument, "reward scale factor must be positive");
    Reward out = rw;
    out.description = std::to_string(c) + "*(" + rw.description + ")";
    auto g = rw.g;
    out.g = [g, c](double x) { return c * g(x); };
    if (rw.dg) {
        auto f = rw.dg;
        out.dg = [f, c](double x) { return c * f(x); };
    }
    if (rw.d2g) {
        auto f = rw.d2g;
        out.d2g = [f, c](double x) { return c * f(x); };
    }
    if (rw.generator_image_closed_form) {
        auto f = rw.generator_image_closed_form;
        out.generator_image_closed_form = [f, c](double a, double y) { return c * f(a, y); };
    }
    if (rw.extension) {
        auto f = rw.extension;
        out.extension = [f, c](double x) { return c * f(x); };
    }
    return out;
}

}  // namespace stopside
