#include "stopside/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stopside {

namespace {

constexpr double kRelationTol = 1e-7;

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Everything needed to evaluate the residual of a right-sided problem.
class Context {
public:
    Context(const Problem& p, const SolveOptions& opts)
        : p_(p), d_(p.diffusion), rw_(p.reward), alpha_(p.alpha), pair_(d_.fundamental_pair_for(p.alpha)),
          x1_(default_rrc_point(d_, rw_)), q_(opts.quadrature)
    {
        bps_ = rw_.kinks;
        bps_.push_back(x1_);
        std::sort(bps_.begin(), bps_.end());
        integrand_ = [this](double y) { return pair_.phi(y) * image(y); };
    }

    const Problem& problem() const { return p_; }
    const Diffusion& diffusion() const { return d_; }
    const Reward& reward() const { return rw_; }
    double alpha() const { return alpha_; }
    const FundamentalPair& pair() const { return pair_; }
    double x1() const { return x1_; }
    const QuadratureOptions& quadrature() const { return q_; }
    const std::vector<double>& breakpoints() const { return bps_; }

    double image(double y) const { return generator_image(d_, rw_, alpha_, y); }

    // int_(x, r] phi (alpha-L)g dm
    double tail(double x) const
    {
        const auto& iv = d_.interval();
        if (!(x < iv.right))
            return 0.0;
        return integrate_against_measure(integrand_, d_.speed(), RegionSpec{x, iv.right, false, iv.right_in_state},
                                         q_, bps_);
    }

    // int_(a, b] phi (alpha-L)g dm
    double panel(double a, double b) const
    {
        if (!(a < b))
            return 0.0;
        return integrate_against_measure(integrand_, d_.speed(), RegionSpec::open_closed(a, b), q_, bps_);
    }

    double residual_from_tail(double x, double t) const
    {
        return rw_.g(x) - pair_.psi(x) * t / pair_.wronskian;
    }

    double residual(double x) const { return residual_from_tail(x, tail(x)); }

    // Points the threshold is pulled onto when the root lands next to them.
    std::vector<double> snap_points() const
    {
        std::vector<double> pts = d_.singular_points();
        pts.insert(pts.end(), rw_.kinks.begin(), rw_.kinks.end());
        pts.push_back(x1_);
        return pts;
    }

private:
    const Problem& p_;
    const Diffusion& d_;
    const Reward& rw_;
    double alpha_;
    FundamentalPair pair_;
    double x1_;
    QuadratureOptions q_;
    std::vector<double> bps_;
    ScalarFn integrand_;
};

// Residual on a grid, built from one tail integral and panels between nodes.
class ResidualTable {
public:
    explicit ResidualTable(const Context& c) : c_(c) {}

    std::vector<double> batch(const std::vector<double>& grid)
    {
        std::size_t n = grid.size();
        xs_ = grid;
        tails_.assign(n, 0.0);
        res_.assign(n, 0.0);
        tails_[n - 1] = c_.tail(grid[n - 1]);
        for (std::size_t i = n - 1; i-- > 0;)
            tails_[i] = tails_[i + 1] + c_.panel(grid[i], grid[i + 1]);
        for (std::size_t i = 0; i < n; ++i)
            res_[i] = c_.residual_from_tail(grid[i], tails_[i]);
        return res_;
    }

    double eval(double x) const
    {
        if (xs_.empty() || x > xs_.back())
            return c_.residual(x);
        auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
        std::size_t j = static_cast<std::size_t>(it - xs_.begin());
        if (xs_[j] == x)
            return res_[j];
        return c_.residual_from_tail(x, tails_[j] + c_.panel(x, xs_[j]));
    }

    const std::vector<double>& nodes() const { return xs_; }
    const std::vector<double>& residuals() const { return res_; }

private:
    const Context& c_;
    std::vector<double> xs_;
    std::vector<double> tails_;
    std::vector<double> res_;
};

double auto_search_hi(const Context& c, std::vector<std::string>& diags)
{
    const double x1 = c.x1();
    const double len = std::max(1.0, std::abs(x1));
    const double right = c.diffusion().interval().right;
    double b = x1 + len;
    for (int n = 0; n <= 40; ++n) {
        double a = x1 + len * std::ldexp(1.0, n - 1);
        b = x1 + len * std::ldexp(1.0, n);
        if (!(b < right)) {
            b = std::isfinite(right) ? right : b;
            break;
        }
        double ra = c.residual(a);
        double rm = c.residual(0.5 * (a + b));
        double rb = c.residual(b);
        if (ra > 0.0 && ra < rm && rm < rb)
            return b;
    }
    diags.push_back("search window expansion budget exhausted; using hi=" + fmt(b));
    return b;
}

double snap(const Context& c, double x, double tol, double scale, const std::function<double(double)>& res)
{
    double best = x;
    double best_dist = std::numeric_limits<double>::infinity();
    for (double p : c.snap_points()) {
        double dist = std::abs(p - x);
        if (!(dist < best_dist) || !c.diffusion().interval().contains(p) || p < c.x1())
            continue;
        bool close = dist <= 4.0 * tol;
        bool exact = dist <= 1e-6 * std::max(1.0, std::abs(x)) && std::abs(res(p)) <= 1e-9 * scale;
        if (close || exact) {
            best = p;
            best_dist = dist;
        }
    }
    return best;
}

Relation classify(double v, double tol)
{
    if (std::abs(v) <= tol)
        return Relation::Equal;
    return v > 0.0 ? Relation::Greater : Relation::Less;
}

void check_generator_sign(const Context& c, double xs, double span, int samples, ConditionCheck& out)
{
    const auto& iv = c.diffusion().interval();
    std::vector<double> ys;
    if (std::isfinite(iv.right)) {
        for (int i = 1; i <= samples; ++i)
            ys.push_back(xs + (iv.right - xs) * i / (samples + 1));
        for (int k = 1; k <= 30; ++k)
            ys.push_back(iv.right - (iv.right - xs) * std::ldexp(1.0, -k));
        if (iv.right_in_state)
            ys.push_back(iv.right);
    } else {
        for (int i = 1; i <= samples; ++i)
            ys.push_back(xs + span * i / samples);
        for (int k = 1; k <= 30; ++k)
            ys.push_back(xs + span * std::ldexp(1.0, k));
    }
    for (const auto& a : c.diffusion().speed().atoms)
        if (a.point > xs && iv.contains(a.point))
            ys.push_back(a.point);
    for (double k : c.reward().kinks)
        if (k > xs && iv.contains(k))
            ys.push_back(k);
    std::sort(ys.begin(), ys.end());

    std::vector<std::pair<double, double>> vals;
    double big = 0.0;
    for (double y : ys) {
        if (!iv.contains(y) || y <= xs)
            continue;
        double v;
        try {
            v = c.image(y);
        } catch (const Error& e) {
            if (!e.is_numeric())
                throw;
            continue;
        }
        if (!std::isfinite(v))
            continue;
        vals.emplace_back(y, v);
        big = std::max(big, std::abs(v));
    }
    double tol = 1e-8 * std::max(1.0, big);
    out.holds = true;
    out.value = std::numeric_limits<double>::infinity();
    for (const auto& [y, v] : vals) {
        out.value = std::min(out.value, v);
        if (v < -tol && out.holds) {
            out.holds = false;
            out.detail = "(alpha-L)g = " + fmt(v) + " < 0 at y=" + fmt(y);
        }
    }
    if (vals.empty())
        out.value = 0.0;
    out.relation = out.holds ? (out.value > 0.0 ? Relation::Greater : Relation::Equal) : Relation::Less;
    if (out.holds)
        out.detail = "min sampled (alpha-L)g on (x*, r) = " + fmt(out.value) + " over " + std::to_string(vals.size())
            + " points";
}

void check_left_majorant(const Context& c, double xs, double span, int samples, ConditionCheck& out)
{
    const auto& iv = c.diffusion().interval();
    const auto& psi = c.pair().psi;
    const auto& g = c.reward().g;
    std::vector<double> ys;
    if (std::isfinite(iv.left)) {
        for (int i = 1; i <= samples; ++i)
            ys.push_back(iv.left + (xs - iv.left) * i / (samples + 1));
        for (int k = 1; k <= 30; ++k)
            ys.push_back(iv.left + (xs - iv.left) * std::ldexp(1.0, -k));
        if (iv.left_in_state)
            ys.push_back(iv.left);
    } else {
        for (int i = 1; i <= samples; ++i)
            ys.push_back(xs - span * i / samples);
        for (int k = 1; k <= 30; ++k)
            ys.push_back(xs - span * std::ldexp(1.0, k));
    }
    for (double p : c.diffusion().singular_points())
        if (p < xs && iv.contains(p))
            ys.push_back(p);
    for (double k : c.reward().kinks)
        if (k < xs && iv.contains(k))
            ys.push_back(k);
    std::sort(ys.begin(), ys.end());

    const double gs = g(xs);
    const double ps = psi(xs);
    const double tol = 1e-9 * std::max(1.0, std::abs(gs));
    out.holds = true;
    out.value = -std::numeric_limits<double>::infinity();
    int count = 0;
    for (double y : ys) {
        if (!iv.contains(y) || y >= xs)
            continue;
        double gap = g(y) - gs * psi(y) / ps;
        if (!std::isfinite(gap))
            continue;
        ++count;
        out.value = std::max(out.value, gap);
        if (gap > tol && out.holds) {
            out.holds = false;
            out.detail = "g exceeds g(x*) psi/psi(x*) by " + fmt(gap) + " at x=" + fmt(y);
        }
    }
    if (count == 0)
        out.value = 0.0;
    out.relation = out.holds ? Relation::Less : Relation::Greater;
    if (out.holds)
        out.detail = "max sampled g - g(x*) psi/psi(x*) left of x* = " + fmt(out.value) + " over "
            + std::to_string(count) + " points";
}

Solution finish(const Context& c, double xs, double hi, Solution sol, const SolveOptions& opts)
{
    const auto& pair = c.pair();
    const auto& rw = c.reward();
    const double w = pair.wronskian;
    const double t = c.tail(xs);
    const double gx = rw.g(xs);
    const double integral_part = pair.psi(xs) * t / w;
    const double r = gx - integral_part;
    const double mass = c.diffusion().speed().atom_mass(xs);
    const double green_diag = pair.psi(xs) * pair.phi(xs) / w;
    const double atom_term = mass > 0.0 ? green_diag * c.image(xs) * mass : 0.0;
    const double scale = std::max({std::abs(gx), std::abs(integral_part), std::abs(atom_term), 1e-300});

    sol.x_star = xs;
    sol.residual = r;
    sol.speed_atom = mass;
    sol.rrc_point = c.x1();

    auto& th = sol.conditions.threshold;
    th.value = r;
    th.relation = classify(r, kRelationTol * scale);
    th.holds = th.relation != Relation::Less;
    th.detail = "residual " + fmt(r) + " relative to scale " + fmt(scale);

    auto& ab = sol.conditions.atom_bound;
    double u = r - atom_term;
    ab.value = u;
    ab.relation = classify(u, kRelationTol * scale);
    ab.holds = ab.relation != Relation::Greater;
    ab.detail = "residual including the atom at x*: " + fmt(u);

    sol.k = th.relation == Relation::Equal ? 0.0 : std::max(0.0, r) / green_diag;

    double span = std::max(hi - xs, std::max(1.0, std::abs(xs)));
    check_generator_sign(c, xs, span, opts.verify_samples, sol.conditions.generator_sign);
    check_left_majorant(c, xs, span, opts.verify_samples, sol.conditions.left_majorant);

    try {
        sol.rrc = check_rrc(c.diffusion(), rw, c.alpha(), c.x1());
    } catch (const Error& e) {
        if (!e.is_numeric())
            throw;
        sol.rrc = RrcReport{false, false, std::numeric_limits<double>::quiet_NaN(), e.what()};
    }

    sol.value = value_function(c.problem(), xs);
    sol.rep_measure.atom_point = xs;
    sol.rep_measure.atom_weight = sol.k;
    sol.rep_measure.density_from = xs;
    sol.rep_measure.density = "(alpha-L)g on (x*, r]";

    bool strict_needs_bound = th.relation == Relation::Greater && xs > c.x1();
    bool sided = th.holds && sol.conditions.generator_sign.holds && sol.conditions.left_majorant.holds
        && (!strict_needs_bound || ab.holds);
    if (!sided)
        sol.status = SolveStatus::NotOneSided;
    else if (!sol.rrc.integrability_ok || !sol.rrc.limit_ok)
        sol.status = SolveStatus::Unverified;
    else
        sol.status = SolveStatus::Verified;
    return sol;
}

Solution mirror_solution(Solution s)
{
    s.side = ProblemSide::Left;
    s.x_star = -s.x_star;
    s.rrc_point = -s.rrc_point;
    s.rep_measure.atom_point = -s.rep_measure.atom_point;
    s.rep_measure.density_from = -s.rep_measure.density_from;
    s.rep_measure.density = "(alpha-L)g on [l, x*)";
    for (auto& r : s.other_roots)
        r = -r;
    auto v = s.value;
    s.value = [v](double x) { return v(-x); };
    return s;
}

std::vector<double> other_sign_changes(const ResidualTable& table, double xs)
{
    std::vector<double> out;
    const auto& x = table.nodes();
    const auto& r = table.residuals();
    if (x.size() < 2)
        return out;
    double spacing = x[1] - x[0];
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (x[i + 1] >= xs - 2.0 * spacing)
            break;
        if ((r[i] < 0.0) != (r[i + 1] < 0.0))
            out.push_back(0.5 * (x[i] + x[i + 1]));
    }
    return out;
}

}  // namespace

void Problem::validate() const
{
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw Error(ErrorKind::ParameterOutOfRange, "alpha must be positive");
    if (!reward.g)
        throw Error(ErrorKind::InvalidArgument, "reward has no payoff function");
}

void SolveOptions::validate() const
{
    if (grid_points < 16)
        throw Error(ErrorKind::InvalidArgument, "grid_points must be at least 16");
    if (!(root_tol > 0.0))
        throw Error(ErrorKind::InvalidArgument, "root_tol must be positive");
    if (verify_samples < 1)
        throw Error(ErrorKind::InvalidArgument, "verify_samples must be positive");
    quadrature.validate();
}

const char* to_string(Relation r)
{
    switch (r) {
    case Relation::Equal: return "=";
    case Relation::Greater: return ">";
    case Relation::Less: return "<";
    }
    return "?";
}

const char* to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Verified: return "Verified";
    case SolveStatus::NotOneSided: return "NotOneSided";
    case SolveStatus::Unverified: return "Unverified";
    }
    return "?";
}

Problem mirror_problem(const Problem& p)
{
    return Problem{reflect(p.diffusion), reflect_reward(p.reward), p.alpha,
                   p.side == ProblemSide::Right ? ProblemSide::Left : ProblemSide::Right};
}

double threshold_residual(const Problem& p, double x, const SolveOptions& opts)
{
    if (p.side == ProblemSide::Left)
        return threshold_residual(mirror_problem(p), -x, opts);
    p.validate();
    p.diffusion.require_in_state(x, "x");
    Context c(p, opts);
    return c.residual(x);
}

Solution solve_right_sided(const Problem& p, const SolveOptions& opts)
{
    if (p.side == ProblemSide::Left)
        return mirror_solution(solve_right_sided(mirror_problem(p), opts));
    p.validate();
    opts.validate();
    Context c(p, opts);
    Solution sol;
    sol.method = "threshold";
    sol.rrc_point = c.x1();

    double hi = opts.search_hi ? *opts.search_hi : auto_search_hi(c, sol.diagnostics);
    if (!(hi > c.x1()))
        throw Error(ErrorKind::InvalidArgument, "search_hi must exceed the RRC point " + fmt(c.x1()));

    ResidualTable table(c);
    auto h = [&table](double x) { return table.eval(x); };
    auto batch = [&table](const std::vector<double>& g) { return table.batch(g); };
    RootOptions ro{opts.grid_points, 2};

    double xs;
    try {
        xs = find_largest_root(h, c.x1(), hi, opts.root_tol, ro, batch);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoRoot)
            throw;
        const auto& res = table.residuals();
        bool nonneg = !res.empty() && std::all_of(res.begin(), res.end(), [](double v) { return v >= 0.0; });
        if (!nonneg) {
            sol.status = SolveStatus::NotOneSided;
            sol.x_star = c.x1();
            sol.value = value_function(p, c.x1());
            sol.diagnostics.push_back("threshold residual is negative on the whole search window [" + fmt(c.x1())
                                      + ", " + fmt(hi) + "]");
            return sol;
        }
        sol.diagnostics.push_back("residual non-negative on the whole window; threshold at the RRC point");
        xs = c.x1();
    }
    double scale = std::max(1.0, std::abs(p.reward.g(xs)));
    xs = snap(c, xs, opts.root_tol, scale, h);
    sol.other_roots = other_sign_changes(table, xs);
    for (double r : sol.other_roots)
        sol.diagnostics.push_back("another sign change of the residual near x=" + fmt(r));
    return finish(c, xs, hi, std::move(sol), opts);
}

Solution solve_sufficient(const Problem& p, const SolveOptions& opts)
{
    if (p.side == ProblemSide::Left)
        return mirror_solution(solve_sufficient(mirror_problem(p), opts));
    p.validate();
    opts.validate();
    Context c(p, opts);
    const auto& d = c.diffusion();
    const auto& iv = d.interval();
    const auto& pair = c.pair();
    const double x1 = c.x1();
    Solution sol;
    sol.method = "sufficient";
    sol.rrc_point = x1;

    ScalarFn img = extension_generator_image(d, p.reward, p.alpha, x1);

    // Single sign change of (alpha-L)g.
    {
        double lo = std::isfinite(iv.left) ? iv.left : x1 - 10.0 * std::max(1.0, std::abs(x1));
        double hi = x1 + 20.0 * std::max(1.0, std::abs(x1));
        if (std::isfinite(iv.right))
            hi = iv.right;
        int changes = 0;
        int last_sign = 0;
        const int n = 4 * opts.grid_points;
        for (int i = 1; i < n; ++i) {
            double y = lo + (hi - lo) * i / n;
            double v;
            try {
                v = img(y);
            } catch (const Error& e) {
                if (!e.is_numeric())
                    throw;
                continue;
            }
            if (!std::isfinite(v) || v == 0.0)
                continue;
            int sgn = v > 0.0 ? 1 : -1;
            if (last_sign != 0 && sgn != last_sign)
                ++changes;
            last_sign = sgn;
        }
        if (changes > 1)
            throw Error(ErrorKind::HypothesisViolated,
                        "(alpha-L)g changes sign " + std::to_string(changes) + " times; the sufficient route needs one");
    }

    auto integrand = [&](double y) { return pair.psi(y) * img(y); };
    std::vector<double> bps = c.breakpoints();
    const QuadratureOptions& q = c.quadrature();
    double b0 = x1 > iv.left
        ? integrate_against_measure(integrand, d.speed(), RegionSpec{iv.left, x1, iv.left_in_state, true}, q, bps)
        : integrand(x1) * d.speed().atom_mass(x1);
    auto piece = [&](double a, double b) {
        return a < b ? integrate_against_measure(integrand, d.speed(), RegionSpec::open_closed(a, b), q, bps) : 0.0;
    };

    double hi;
    if (opts.search_hi) {
        hi = *opts.search_hi;
    } else {
        double len = std::max(1.0, std::abs(x1));
        hi = x1 + len;
        double acc = b0 + piece(x1, hi);
        int n = 0;
        while (acc < 0.0 && n < 40 && x1 + 2.0 * (hi - x1) < iv.right) {
            double next = x1 + 2.0 * (hi - x1);
            acc += piece(hi, next);
            hi = next;
            ++n;
        }
        hi = x1 + 2.0 * (hi - x1) < iv.right ? x1 + 2.0 * (hi - x1) : hi;
    }
    if (!(hi > x1))
        throw Error(ErrorKind::InvalidArgument, "search_hi must exceed the RRC point " + fmt(x1));

    const int n = opts.grid_points;
    double xs = std::numeric_limits<double>::quiet_NaN();
    double acc = b0;
    if (acc >= 0.0) {
        xs = x1;
    } else {
        double prev = x1;
        for (int i = 1; i <= n; ++i) {
            double x = x1 + (hi - x1) * i / n;
            double next_acc = acc + piece(prev, x);
            if (next_acc >= 0.0) {
                double a = prev;
                double bb = x;
                double base = acc;
                while (bb - a > opts.root_tol) {
                    double mid = 0.5 * (a + bb);
                    if (!(mid > a && mid < bb))
                        break;
                    if (base + piece(prev, mid) >= 0.0)
                        bb = mid;
                    else
                        a = mid;
                }
                xs = 0.5 * (a + bb);
                break;
            }
            acc = next_acc;
            prev = x;
        }
    }
    if (std::isnan(xs)) {
        sol.status = SolveStatus::NotOneSided;
        sol.x_star = x1;
        sol.value = value_function(p, x1);
        sol.diagnostics.push_back("int psi (alpha-L)g dm stays negative on [" + fmt(x1) + ", " + fmt(hi) + "]");
        return sol;
    }
    double scale = std::max(1.0, std::abs(p.reward.g(xs)));
    xs = snap(c, xs, opts.root_tol, scale, [&c](double x) { return c.residual(x); });
    return finish(c, xs, hi, std::move(sol), opts);
}

ScalarFn value_function(const Problem& p, double x_star)
{
    p.diffusion.require_in_state(x_star, "x_star");
    auto pair = p.diffusion.fundamental_pair_for(p.alpha);
    auto g = p.reward.g;
    const double gs = g(x_star);
    if (p.side == ProblemSide::Right) {
        const double ps = pair.psi(x_star);
        auto psi = pair.psi;
        return [=](double x) { return x >= x_star ? g(x) : gs * psi(x) / ps; };
    }
    const double fs = pair.phi(x_star);
    auto phi = pair.phi;
    return [=](double x) { return x <= x_star ? g(x) : gs * phi(x) / fs; };
}

double expected_reward_of_threshold(const Problem& p, double x, double z)
{
    p.diffusion.require_in_state(x, "x");
    p.diffusion.require_in_state(z, "z");
    auto pair = p.diffusion.fundamental_pair_for(p.alpha);
    if (p.side == ProblemSide::Right)
        return x <= z ? p.reward.g(z) * pair.psi(x) / pair.psi(z) : p.reward.g(x);
    return x >= z ? p.reward.g(z) * pair.phi(x) / pair.phi(z) : p.reward.g(x);
}

}  // namespace stopside
