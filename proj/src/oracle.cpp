#include "stopside/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stopside {

namespace {

constexpr double kDiscountFloor = 1.9287498479639178e-22;   // exp(-50)

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double scale_inverse(const Diffusion& d, double u, double lo, double hi)
{
    const auto& sc = d.scale();
    if (sc.inverse)
        return sc.inverse(u);
    double a = lo;
    double b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        double mid = 0.5 * (a + b);
        if (sc.value(mid) < u)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

// Tridiagonal solve; sub[i] couples i to i-1, sup[i] couples i to i+1.
std::vector<double> thomas(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                           std::vector<double> rhs)
{
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    return x;
}

}  // namespace

double ratio_argmax(const Problem& p, const std::vector<double>& grid)
{
    if (grid.empty())
        throw Error(ErrorKind::InvalidArgument, "ratio oracle needs a non-empty grid");
    auto pair = p.diffusion.fundamental_pair_for(p.alpha);
    const bool right = p.side == ProblemSide::Right;
    const auto& harmonic = right ? pair.psi : pair.phi;
    std::vector<double> zs = grid;
    std::sort(zs.begin(), zs.end());
    if (!right)
        std::reverse(zs.begin(), zs.end());
    double best = zs.front();
    double best_val = -std::numeric_limits<double>::infinity();
    for (double z : zs) {
        p.diffusion.require_in_state(z, "grid point");
        double v = p.reward.g(z) / harmonic(z);
        if (v >= best_val) {
            best_val = v;
            best = z;
        }
    }
    return best;
}

ChainApprox build_chain(const Problem& p, double lo, double hi, double h)
{
    const auto& d = p.diffusion;
    const auto& iv = d.interval();
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorKind::InvalidArgument, "chain window needs finite lo < hi");
    if (!(h > 0.0))
        throw Error(ErrorKind::InvalidArgument, "chain spacing must be positive");
    d.require_in_state(lo, "chain lower end");
    d.require_in_state(hi, "chain upper end");

    const auto& s = d.scale().value;
    const double slo = s(lo);
    const double shi = s(hi);
    double anchor = slo;
    for (double sp : d.singular_points())
        if (sp > lo && sp < hi) {
            anchor = s(sp);
            break;
        }
    long long kmin = static_cast<long long>(std::ceil((slo - anchor) / h - 1e-9));
    long long kmax = static_cast<long long>(std::floor((shi - anchor) / h + 1e-9));
    if (kmax - kmin < 2)
        throw Error(ErrorKind::InvalidArgument, "chain window holds fewer than three nodes");
    if (kmax - kmin > 20000000)
        throw Error(ErrorKind::InvalidArgument, "chain spacing too fine for the window");

    ChainApprox c;
    for (long long k = kmin; k <= kmax; ++k) {
        double u = anchor + static_cast<double>(k) * h;
        double x = k == kmin && std::abs(u - slo) <= 1e-9 * h ? lo : scale_inverse(d, u, lo, hi);
        c.grid.push_back(std::clamp(x, lo, hi));
    }
    for (double sp : d.singular_points()) {
        if (!(sp > lo && sp < hi))
            continue;
        auto it = std::min_element(c.grid.begin(), c.grid.end(),
                                   [sp](double a, double b) { return std::abs(a - sp) < std::abs(b - sp); });
        *it = sp;
    }

    const std::size_t n = c.grid.size();
    c.up_prob.assign(n, 0.0);
    c.down_prob.assign(n, 0.0);
    c.expected_hold.assign(n, 0.0);
    c.discount_per_step.assign(n, 0.0);
    c.lower_reflecting = iv.left_in_state && lo == iv.left && iv.left_behavior == Boundary::Reflecting;
    QuadratureOptions q{1e-10, 1e-14, 60};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = c.grid[i];
        const double sx = s(x);
        if (i == 0 || i + 1 == n) {
            if (i == 0 && c.lower_reflecting) {
                const double b = c.grid[1];
                const double sb = s(b);
                c.up_prob[0] = 1.0;
                c.expected_hold[0] = integrate_against_measure([&](double y) { return sb - s(y); }, d.speed(),
                                                               RegionSpec::closed_open(x, b), q);
            }
        } else {
            const double a = c.grid[i - 1];
            const double b = c.grid[i + 1];
            const double sa = s(a);
            const double sb = s(b);
            c.up_prob[i] = (sx - sa) / (sb - sa);
            c.down_prob[i] = 1.0 - c.up_prob[i];
            auto kernel = [&](double y) {
                double sy = s(y);
                return (std::min(sx, sy) - sa) * (sb - std::max(sx, sy)) / (sb - sa);
            };
            double bp[] = {x};
            c.expected_hold[i] = integrate_against_measure(kernel, d.speed(), RegionSpec::open(a, b), q, bp);
        }
        c.discount_per_step[i] = 1.0 / (1.0 + p.alpha * c.expected_hold[i]);
    }
    return c;
}

std::vector<double> chain_value(const Problem& p, const ChainApprox& chain, double tol)
{
    const std::size_t n = chain.grid.size();
    if (n < 3)
        throw Error(ErrorKind::InvalidArgument, "chain needs at least three nodes");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = p.reward.g(chain.grid[i]);

    auto interior = [&](std::size_t i) { return (i > 0 && i + 1 < n) || (i == 0 && chain.lower_reflecting); };
    auto continuation = [&](const std::vector<double>& v, std::size_t i) {
        double up = i + 1 < n ? chain.up_prob[i] * v[i + 1] : 0.0;
        double down = i > 0 ? chain.down_prob[i] * v[i - 1] : 0.0;
        return chain.discount_per_step[i] * (up + down);
    };

    // Policy iteration, starting from "stop wherever g > 0".
    std::vector<char> stop(n);
    for (std::size_t i = 0; i < n; ++i)
        stop[i] = !interior(i) || g[i] > 0.0;
    std::vector<double> v;
    for (int iter = 0; iter < 10000; ++iter) {
        std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (stop[i]) {
                rhs[i] = g[i];
                continue;
            }
            const double beta = chain.discount_per_step[i];
            if (i > 0)
                sub[i] = -beta * chain.down_prob[i];
            if (i + 1 < n)
                sup[i] = -beta * chain.up_prob[i];
        }
        v = thomas(sub, diag, sup, rhs);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!interior(i))
                continue;
            bool s = g[i] >= continuation(v, i) - tol;
            if (s != static_cast<bool>(stop[i])) {
                stop[i] = s;
                changed = true;
            }
        }
        if (!changed)
            return v;
    }
    throw Error(ErrorKind::NonConvergent, "chain policy iteration did not settle");
}

double chain_frontier(const Problem& p, const ChainApprox& chain, const std::vector<double>& values)
{
    const std::size_t n = chain.grid.size();
    if (values.size() != n)
        throw Error(ErrorKind::InvalidArgument, "chain values do not match the grid");
    auto stopped = [&](std::size_t i) {
        double g = p.reward.g(chain.grid[i]);
        return values[i] <= g + 1e-12 * std::max(1.0, std::abs(g));
    };
    if (p.side == ProblemSide::Right) {
        std::size_t i = n - 1;
        while (i > 0 && stopped(i - 1))
            --i;
        return chain.grid[i];
    }
    std::size_t i = 0;
    while (i + 1 < n && stopped(i + 1))
        ++i;
    return chain.grid[i];
}

McEstimate mc_policy_value(const Problem& p, double x0, double z, long long n_paths, std::uint64_t seed)
{
    if (n_paths < 1)
        throw Error(ErrorKind::InvalidArgument, "n_paths must be positive");
    if (p.side == ProblemSide::Left) {
        McEstimate e = mc_policy_value(mirror_problem(p), -x0, -z, n_paths, seed);
        return e;
    }
    const auto& d = p.diffusion;
    d.require_in_state(x0, "x0");
    d.require_in_state(z, "z");
    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    const double gz = p.reward.g(z);
    if (x0 >= z) {
        est.mean = p.reward.g(x0);
        return est;
    }
    if (!d.walker())
        throw Error(ErrorKind::Unsimulable, "diffusion '" + d.name() + "' has no passage walker");

    const std::uint64_t base = splitmix64(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long long k = 0; k < n_paths; ++k) {
        Rng rng(splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(k))));
        double x = x0;
        double weight = 1.0;
        for (;;) {
            WalkStep st = d.walker()(x, z, p.alpha, rng);
            weight *= st.weight;
            x = st.next;
            if (x == z)
                break;
            if (weight < kDiscountFloor) {
                weight = 0.0;
                ++est.truncated;
                break;
            }
        }
        double v = weight * gz;
        sum += v;
        sum_sq += v * v;
    }
    const double nd = static_cast<double>(n_paths);
    est.mean = sum / nd;
    double var = n_paths > 1 ? std::max(0.0, (sum_sq - nd * est.mean * est.mean) / (nd - 1.0)) : 0.0;
    // Sampling error, plus the discount truncation bias and a summation rounding bound.
    est.std_error = std::sqrt(var / nd) + kDiscountFloor * std::abs(gz)
        + nd * std::numeric_limits<double>::epsilon() * std::abs(est.mean);
    return est;
}

}  // namespace stopside
