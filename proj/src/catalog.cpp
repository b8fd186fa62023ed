#include "stopside/catalog.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace stopside {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw Error(ErrorKind::ParameterOutOfRange, what);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool coin(Rng& rng, double p) { return uniform01(rng) < p; }

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// 1/cosh(a) without overflow.
double sech(double a)
{
    double e = std::exp(-std::abs(a));
    return 2.0 * e / (1.0 + e * e);
}

// Distance from y to the nearest of the given points other than y itself.
double step_size(double y, std::initializer_list<double> points)
{
    double d = kInf;
    for (double p : points) {
        double dist = std::abs(p - y);
        if (dist > 0.0)
            d = std::min(d, dist);
    }
    return d;
}

// Exit of (y-d, y+d) for unit-variance BM with drift nu: side chosen with
// probability 1/2, weight 2 E[exp(-alpha tau); exit at that side].
WalkStep drift_exit(double y, double d, double nu, double alpha, Rng& rng)
{
    double gamma = std::sqrt(nu * nu + 2.0 * alpha);
    bool up = coin(rng, 0.5);
    double e = std::exp(-2.0 * gamma * d);
    double w = 2.0 * std::exp((up ? nu : -nu) * d - gamma * d) / (1.0 + e);
    return {up ? y + d : y - d, w};
}

ScaleFunction identity_scale()
{
    ScaleFunction s;
    s.value = [](double x) { return x; };
    s.derivative_right = [](double) { return 1.0; };
    s.derivative_left = [](double) { return 1.0; };
    s.inverse = [](double u) { return u; };
    return s;
}

LocalCoefficients bm_coefficients()
{
    return {[](double) { return 1.0; }, [](double) { return 0.0; }};
}

FixedTimeSampler gaussian_sampler()
{
    return [](double x, double t, Rng& rng) { return x + std::sqrt(t) * normal(rng); };
}

}  // namespace

bool ParamSpec::accepts(double v) const
{
    if (!std::isfinite(v))
        return false;
    bool lo_ok = lo_open ? v > lo : v >= lo;
    bool hi_ok = hi_open ? v < hi : v <= hi;
    return lo_ok && hi_ok;
}

std::string ParamSpec::range_text() const
{
    std::ostringstream os;
    os << (lo_open ? "(" : "[");
    if (std::isinf(lo))
        os << "-inf";
    else
        os << lo;
    os << ", ";
    if (std::isinf(hi))
        os << "inf";
    else
        os << hi;
    os << (hi_open ? ")" : "]");
    return os.str();
}

std::pair<double, double> gbm_exponents(double mu, double sigma, double alpha)
{
    double s2 = sigma * sigma;
    double b = 0.5 - mu / s2;
    double root = std::sqrt(b * b + 2.0 * alpha / s2);
    return {b + root, b - root};
}

Diffusion standard_bm()
{
    Diffusion::Parts p;
    p.name = "standard_bm";
    p.interval = {-kInf, kInf, false, false, Boundary::Natural, Boundary::Natural};
    p.scale = identity_scale();
    p.speed.density = [](double) { return 2.0; };
    p.pair = [](double alpha) {
        double th = std::sqrt(2.0 * alpha);
        FundamentalPair f;
        f.psi = [th](double x) { return std::exp(th * x); };
        f.phi = [th](double x) { return std::exp(-th * x); };
        f.psi_ds_right = f.psi_ds_left = [th](double x) { return th * std::exp(th * x); };
        f.phi_ds_right = f.phi_ds_left = [th](double x) { return -th * std::exp(-th * x); };
        return f;
    };
    p.coefficients = bm_coefficients();
    p.walker = [](double x, double z, double alpha, Rng& rng) {
        double d = step_size(x, {z});
        auto st = drift_exit(x, d, 0.0, alpha, rng);
        if (st.next > x && d == z - x)
            st.next = z;
        if (st.next < x && d == x - z)
            st.next = z;
        return st;
    };
    p.sampler = gaussian_sampler();
    return Diffusion(std::move(p));
}

Diffusion gbm(double mu, double sigma)
{
    require(std::isfinite(mu), "gbm: mu must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), "gbm: sigma must be positive");
    const double s2 = sigma * sigma;
    const double pw = 1.0 - 2.0 * mu / s2;

    Diffusion::Parts p;
    p.name = "gbm";
    p.interval = {0.0, kInf, false, false, Boundary::Natural, Boundary::Natural};
    if (pw == 0.0) {
        p.scale.value = [](double x) { return std::log(x); };
        p.scale.inverse = [](double u) { return std::exp(u); };
    } else {
        p.scale.value = [pw](double x) { return std::pow(x, pw) / pw; };
        p.scale.inverse = [pw](double u) { return std::pow(pw * u, 1.0 / pw); };
    }
    p.scale.derivative_right = p.scale.derivative_left = [pw](double x) { return std::pow(x, pw - 1.0); };
    p.speed.density = [pw, s2](double x) { return 2.0 * std::pow(x, -pw - 1.0) / s2; };
    p.pair = [mu, sigma, pw](double alpha) {
        auto [g1, g2] = gbm_exponents(mu, sigma, alpha);
        FundamentalPair f;
        f.psi = [g1](double x) { return std::pow(x, g1); };
        f.phi = [g2](double x) { return std::pow(x, g2); };
        f.psi_ds_right = f.psi_ds_left = [g1, pw](double x) { return g1 * std::pow(x, g1 - pw); };
        f.phi_ds_right = f.phi_ds_left = [g2, pw](double x) { return g2 * std::pow(x, g2 - pw); };
        return f;
    };
    p.coefficients = LocalCoefficients{[s2](double x) { return s2 * x * x; }, [mu](double x) { return mu * x; }};
    const double nu = (mu - 0.5 * s2) / sigma;
    p.walker = [sigma, nu](double x, double z, double alpha, Rng& rng) {
        double y = std::log(x) / sigma;
        double yz = std::log(z) / sigma;
        double d = std::abs(yz - y);
        auto st = drift_exit(y, d, nu, alpha, rng);
        bool hit = (st.next > y) == (yz > y);
        return WalkStep{hit ? z : std::exp(sigma * st.next), st.weight};
    };
    p.sampler = [mu, sigma](double x, double t, Rng& rng) {
        return x * std::exp((mu - 0.5 * sigma * sigma) * t + sigma * std::sqrt(t) * normal(rng));
    };
    return Diffusion(std::move(p));
}

Diffusion reflected_bm_drift(double r_rate, double sigma)
{
    require(r_rate > 0.0 && std::isfinite(r_rate), "reflected_bm_drift: r must be positive");
    require(sigma > 0.0 && std::isfinite(sigma), "reflected_bm_drift: sigma must be positive");
    const double delta = (r_rate + 0.5 * sigma * sigma) / sigma;

    Diffusion::Parts p;
    p.name = "reflected_bm_drift";
    p.interval = {0.0, kInf, true, false, Boundary::Reflecting, Boundary::Natural};
    p.scale.value = [delta](double x) { return std::expm1(2.0 * delta * x) / (2.0 * delta); };
    p.scale.derivative_right = p.scale.derivative_left = [delta](double x) { return std::exp(2.0 * delta * x); };
    p.scale.inverse = [delta](double u) { return std::log1p(2.0 * delta * u) / (2.0 * delta); };
    p.speed.density = [delta](double x) { return 2.0 * std::exp(-2.0 * delta * x); };
    p.pair = [delta](double alpha) {
        double g = std::sqrt(2.0 * alpha + delta * delta);
        FundamentalPair f;
        f.psi = [g, delta](double x) {
            return ((g - delta) * std::exp((g + delta) * x) + (g + delta) * std::exp(-(g - delta) * x)) / (2.0 * g);
        };
        f.phi = [g, delta](double x) { return std::exp(-(g - delta) * x); };
        f.psi_ds_right = f.psi_ds_left = [g, delta](double x) {
            double c = (g * g - delta * delta) / (2.0 * g);
            return c * (std::exp((g - delta) * x) - std::exp(-(g + delta) * x));
        };
        f.phi_ds_right = f.phi_ds_left = [g, delta](double x) { return -(g - delta) * std::exp(-(g + delta) * x); };
        return f;
    };
    p.coefficients = LocalCoefficients{[](double) { return 1.0; }, [delta](double) { return -delta; }};
    p.walker = [delta](double x, double z, double alpha, Rng& rng) {
        if (x == 0.0) {
            double d = z;
            double g = std::sqrt(2.0 * alpha + delta * delta);
            double lp = delta + g;
            double lm = delta - g;
            // E_0[exp(-alpha H_d)] for the reflected process, i.e. psi(0)/psi(d).
            double w = (lp - lm) / (lp * std::exp(lm * d) - lm * std::exp(lp * d));
            return WalkStep{z, w};
        }
        double d = step_size(x, {z, 0.0});
        auto st = drift_exit(x, d, -delta, alpha, rng);
        if (std::abs(st.next - z) <= 1e-12 * std::max(1.0, std::abs(z)))
            st.next = z;
        if (st.next < 0.0 || std::abs(st.next) <= 1e-15)
            st.next = 0.0;
        return st;
    };
    p.sampler = [delta](double x, double t, Rng& rng) {
        double end = x - delta * t + std::sqrt(t) * normal(rng);
        double u = uniform01(rng);
        double low = 0.5 * (x + end - std::sqrt((x - end) * (x - end) - 2.0 * t * std::log1p(-u)));
        return end + std::max(0.0, -low);
    };
    return Diffusion(std::move(p));
}

Diffusion skew_bm(double beta)
{
    require(beta > 0.0 && beta < 1.0, "skew_bm: beta must lie in (0, 1)");
    Diffusion::Parts p;
    p.name = "skew_bm";
    p.interval = {-kInf, kInf, false, false, Boundary::Natural, Boundary::Natural};
    p.scale.value = [beta](double x) { return x >= 0.0 ? x / beta : x / (1.0 - beta); };
    p.scale.derivative_right = [beta](double x) { return x >= 0.0 ? 1.0 / beta : 1.0 / (1.0 - beta); };
    p.scale.derivative_left = [beta](double x) { return x > 0.0 ? 1.0 / beta : 1.0 / (1.0 - beta); };
    p.scale.inverse = [beta](double u) { return u >= 0.0 ? u * beta : u * (1.0 - beta); };
    p.scale.kinks = {0.0};
    p.speed.density = [beta](double x) { return x >= 0.0 ? 2.0 * beta : 2.0 * (1.0 - beta); };
    p.speed.breakpoints = {0.0};
    p.pair = [beta](double alpha) {
        const double th = std::sqrt(2.0 * alpha);
        const double a = (1.0 - 2.0 * beta) / beta;          // psi coefficient
        const double b = (2.0 * beta - 1.0) / (1.0 - beta);  // phi coefficient (mirror, beta -> 1-beta)
        FundamentalPair f;
        f.psi = [th, a](double x) { return x <= 0.0 ? std::exp(th * x) : a * std::sinh(th * x) + std::exp(th * x); };
        f.phi = [th, b](double x) { return x >= 0.0 ? std::exp(-th * x) : -b * std::sinh(th * x) + std::exp(-th * x); };
        auto psi_dx = [th, a](double x, bool right) {
            bool pos = right ? x >= 0.0 : x > 0.0;
            return pos ? th * (a * std::cosh(th * x) + std::exp(th * x)) : th * std::exp(th * x);
        };
        auto phi_dx = [th, b](double x, bool right) {
            bool pos = right ? x >= 0.0 : x > 0.0;
            return pos ? -th * std::exp(-th * x) : -th * (b * std::cosh(th * x) + std::exp(-th * x));
        };
        auto sprime = [beta](double x, bool right) {
            bool pos = right ? x >= 0.0 : x > 0.0;
            return pos ? 1.0 / beta : 1.0 / (1.0 - beta);
        };
        f.psi_ds_right = [=](double x) { return psi_dx(x, true) / sprime(x, true); };
        f.psi_ds_left = [=](double x) { return psi_dx(x, false) / sprime(x, false); };
        f.phi_ds_right = [=](double x) { return phi_dx(x, true) / sprime(x, true); };
        f.phi_ds_left = [=](double x) { return phi_dx(x, false) / sprime(x, false); };
        return f;
    };
    p.coefficients = bm_coefficients();
    p.walker = [beta](double x, double z, double alpha, Rng& rng) {
        double d = step_size(x, {z, 0.0});
        double th = std::sqrt(2.0 * alpha);
        double w = sech(th * d);
        bool up = coin(rng, x == 0.0 ? beta : 0.5);
        double next = up ? x + d : x - d;
        if (std::abs(next - z) <= 1e-12 * std::max(1.0, std::abs(z)))
            next = z;
        if (std::abs(next) <= 1e-15)
            next = 0.0;
        return WalkStep{next, w};
    };
    p.sampler = [beta](double x, double t, Rng& rng) {
        double end = x + std::sqrt(t) * normal(rng);
        bool crossed = x == 0.0 || (end >= 0.0) != (x >= 0.0)
            || coin(rng, std::exp(-2.0 * std::abs(x) * std::abs(end) / t));
        if (!crossed)
            return end;
        return coin(rng, beta) ? std::abs(end) : -std::abs(end);
    };
    return Diffusion(std::move(p));
}

Diffusion sticky_bm(double stickiness)
{
    require(stickiness > 0.0 && std::isfinite(stickiness), "sticky_bm: stickiness must be positive");
    const double c = stickiness;
    Diffusion::Parts p;
    p.name = "sticky_bm";
    p.interval = {-kInf, kInf, false, false, Boundary::Natural, Boundary::Natural};
    p.scale = identity_scale();
    p.speed.density = [](double) { return 2.0; };
    p.speed.atoms = {{0.0, 2.0 * c}};
    p.pair = [c](double alpha) {
        const double th = std::sqrt(2.0 * alpha);
        const double A = 1.0 + c * alpha / th;
        const double B = -c * alpha / th;
        FundamentalPair f;
        f.psi = [=](double x) { return x <= 0.0 ? std::exp(th * x) : A * std::exp(th * x) + B * std::exp(-th * x); };
        f.phi = [=](double x) { return x >= 0.0 ? std::exp(-th * x) : A * std::exp(-th * x) + B * std::exp(th * x); };
        f.psi_ds_right = [=](double x) {
            return x < 0.0 ? th * std::exp(th * x) : th * (A * std::exp(th * x) - B * std::exp(-th * x));
        };
        f.psi_ds_left = [=](double x) {
            return x <= 0.0 ? th * std::exp(th * x) : th * (A * std::exp(th * x) - B * std::exp(-th * x));
        };
        f.phi_ds_right = [=](double x) {
            return x >= 0.0 ? -th * std::exp(-th * x) : -th * (A * std::exp(-th * x) - B * std::exp(th * x));
        };
        f.phi_ds_left = [=](double x) {
            return x > 0.0 ? -th * std::exp(-th * x) : -th * (A * std::exp(-th * x) - B * std::exp(th * x));
        };
        return f;
    };
    p.coefficients = bm_coefficients();
    p.walker = [c](double x, double z, double alpha, Rng& rng) {
        double d = step_size(x, {z, 0.0});
        double th = std::sqrt(2.0 * alpha);
        double w;
        if (x == 0.0) {
            double e = std::exp(-th * d);
            double ch = 0.5 * (1.0 + e * e);
            double sh = 0.5 * (1.0 - e * e);
            w = e / (ch + c * alpha / th * sh);
        } else {
            w = sech(th * d);
        }
        double next = coin(rng, 0.5) ? x + d : x - d;
        if (std::abs(next - z) <= 1e-12 * std::max(1.0, std::abs(z)))
            next = z;
        if (std::abs(next) <= 1e-15)
            next = 0.0;
        return WalkStep{next, w};
    };
    return Diffusion(std::move(p));
}

Reward call_reward(double strike)
{
    require(std::isfinite(strike), "call: K must be finite");
    Reward rw;
    rw.description = "(x - " + std::to_string(strike) + ")^+";
    rw.g = [strike](double x) { return std::max(x - strike, 0.0); };
    rw.dg = [strike](double x) { return x >= strike ? 1.0 : 0.0; };
    rw.d2g = [](double) { return 0.0; };
    rw.support_left = strike;
    rw.kinks = {strike};
    return rw;
}

Reward shifted_call_reward(double shift)
{
    require(std::isfinite(shift), "shifted_call: c must be finite");
    Reward rw = call_reward(-shift);
    rw.description = "(x + " + std::to_string(shift) + ")^+";
    return rw;
}

Reward exponential_reward(double sigma)
{
    require(std::isfinite(sigma), "exponential: sigma must be finite");
    Reward rw;
    rw.description = "exp(" + std::to_string(sigma) + " x)";
    rw.g = [sigma](double x) { return std::exp(sigma * x); };
    rw.dg = [sigma](double x) { return sigma * std::exp(sigma * x); };
    rw.d2g = [sigma](double x) { return sigma * sigma * std::exp(sigma * x); };
    return rw;
}

const std::vector<CatalogEntry>& catalog_entries()
{
    static const std::vector<CatalogEntry> entries = [] {
        std::vector<CatalogEntry> v;
        v.push_back({"standard_bm", "Brownian motion on R, s(x)=x, m(dx)=2dx", {}, [](const ParamMap&) {
                         return standard_bm();
                     }});
        v.push_back({"gbm",
                     "geometric Brownian motion on (0,inf)",
                     {{"mu", -kInf, kInf, true, true, 0.0, "drift"},
                      {"sigma", 0.0, kInf, true, true, 1.0, "volatility"}},
                     [](const ParamMap& m) { return gbm(m.at("mu"), m.at("sigma")); }});
        v.push_back({"reflected_bm_drift",
                     "Brownian motion with drift -(r+sigma^2/2)/sigma reflected at 0",
                     {{"r", 0.0, kInf, true, true, 0.05, "interest rate"},
                      {"sigma", 0.0, kInf, true, true, 0.3, "volatility"}},
                     [](const ParamMap& m) { return reflected_bm_drift(m.at("r"), m.at("sigma")); }});
        v.push_back({"skew_bm",
                     "skew Brownian motion on R",
                     {{"beta", 0.0, 1.0, true, true, 0.5, "skewness parameter"}},
                     [](const ParamMap& m) { return skew_bm(m.at("beta")); }});
        v.push_back({"sticky_bm",
                     "Brownian motion sticky at 0, m(dx)=2dx+2 theta delta_0",
                     {{"theta", 0.0, kInf, true, true, 1.0, "stickiness"}},
                     [](const ParamMap& m) { return sticky_bm(m.at("theta")); }});
        return v;
    }();
    return entries;
}

const CatalogEntry& catalog_entry(const std::string& name)
{
    for (const auto& e : catalog_entries())
        if (e.name == name)
            return e;
    throw Error(ErrorKind::InvalidArgument, "unknown catalog diffusion '" + name + "'");
}

Diffusion build_diffusion(const std::string& name, const ParamMap& params)
{
    const auto& entry = catalog_entry(name);
    ParamMap full;
    for (const auto& spec : entry.parameter_schema)
        full[spec.name] = spec.default_value;
    for (const auto& [key, value] : params) {
        auto it = std::find_if(entry.parameter_schema.begin(), entry.parameter_schema.end(),
                               [&](const ParamSpec& s) { return s.name == key; });
        if (it == entry.parameter_schema.end())
            throw Error(ErrorKind::InvalidArgument, name + ": unknown parameter '" + key + "'");
        if (!it->accepts(value))
            throw Error(ErrorKind::ParameterOutOfRange,
                        name + ": parameter " + key + " must lie in " + it->range_text());
        full[key] = value;
    }
    return entry.build(full);
}

}  // namespace stopside
