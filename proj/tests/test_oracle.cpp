#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "problems.hpp"
#include "stopside/oracle.hpp"

using namespace stopside;
using namespace testing_problems;

namespace {

std::vector<double> uniform(double lo, double hi, int n)
{
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

}  // namespace

TEST_CASE("ratio_argmax")
{
    auto grid = uniform(-1.0, 3.0, 4001);
    double cell = 4.0 / 4000;
    CHECK(std::abs(ratio_argmax(bm_call(0.5), grid) - 1.0) <= cell);
    CHECK(std::abs(ratio_argmax(skew_call(0.9, 1.0), grid) - kSkewThreshold) <= cell);
    Problem flat{standard_bm(), parse_reward("1 + 0*x"), 0.5};
    CHECK(ratio_argmax(flat, grid) == grid.front());
}

TEST_CASE("chain construction")
{
    ChainApprox c = build_chain(sticky_shifted(0.28), -3.0, 3.0, 0.01);
    CHECK(std::is_sorted(c.grid.begin(), c.grid.end()));
    CHECK(std::find(c.grid.begin(), c.grid.end(), 0.0) != c.grid.end());
    // The window ends are absorbing.
    for (std::size_t i = 1; i + 1 < c.grid.size(); ++i) {
        CHECK(c.up_prob[i] + c.down_prob[i] == doctest::Approx(1.0));
        CHECK(c.discount_per_step[i] < 1.0);
    }
    // The sticky node holds longer than its neighbours.
    auto it = std::find(c.grid.begin(), c.grid.end(), 0.0);
    auto i = static_cast<std::size_t>(it - c.grid.begin());
    CHECK(c.expected_hold[i] > 10.0 * c.expected_hold[i + 1]);

    ChainApprox r = build_chain(russian(0.1, 0.05, 0.3), 0.0, 3.0, 0.01);
    CHECK(r.lower_reflecting);
    CHECK(r.grid.front() == 0.0);
    CHECK(r.up_prob.front() == 1.0);
}

TEST_CASE("chain value on simple problems")
{
    Problem zero{standard_bm(), parse_reward("0*x"), 0.5};
    ChainApprox c = build_chain(zero, -2.0, 2.0, 0.01);
    auto v = chain_value(zero, c);
    CHECK(*std::max_element(v.begin(), v.end()) == 0.0);

    Problem p = bm_call(2.0);
    ChainApprox cp = build_chain(p, -6.0, 3.0, 0.005);
    auto vp = chain_value(p, cp);
    for (std::size_t i = 0; i < cp.grid.size(); ++i) {
        CHECK(vp[i] >= p.reward.g(cp.grid[i]));
        if (cp.grid[i] >= 0.5 + 2 * 0.005)
            CHECK(vp[i] == doctest::Approx(p.reward.g(cp.grid[i])).epsilon(1e-12));
    }
}

TEST_CASE("chain value converges at first order on standard BM")
{
    Problem p = bm_call(0.5);
    Solution s = solve_right_sided(p);
    auto gap = [&](double h) {
        ChainApprox c = build_chain(p, -10.0, 3.0, h);
        auto v = chain_value(p, c);
        double worst = 0.0;
        for (std::size_t i = 0; i < c.grid.size(); ++i)
            if (c.grid[i] >= -2.0)
                worst = std::max(worst, std::abs(v[i] - s.value(c.grid[i])));
        return worst;
    };
    double g1 = gap(0.04), g2 = gap(0.02), g3 = gap(0.01);
    CHECK(g2 <= 0.5 * g1 * 1.05);
    CHECK(g3 <= 0.5 * g2 * 1.05);
}

TEST_CASE("chain frontier tracks the threshold")
{
    Problem p = bm_call(0.5);
    ChainApprox c = build_chain(p, -20.0, 3.0, 0.005);
    auto v = chain_value(p, c);
    CHECK(std::abs(chain_frontier(p, c, v) - 1.0) <= 2 * 0.005);
}

TEST_CASE("Monte Carlo policy value")
{
    Problem p = bm_call(0.5);
    McEstimate a = mc_policy_value(p, 0.0, 1.0, 20000, 42);
    McEstimate b = mc_policy_value(p, 0.0, 1.0, 20000, 42);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.std_error > 0.0);
    CHECK(a.seed == 42);
    CHECK(std::abs(a.mean - std::exp(-1.0)) <= 3.0 * a.std_error);
    McEstimate c = mc_policy_value(p, 0.0, 1.0, 20000, 43);
    CHECK(c.mean != a.mean);

    McEstimate at = mc_policy_value(p, 1.0, 1.0, 100, 1);
    CHECK(at.mean == 1.0);
    McEstimate past = mc_policy_value(p, 1.5, 1.0, 100, 1);
    CHECK(past.mean == 1.5);
}

TEST_CASE("Monte Carlo through singular points")
{
    struct Case {
        Problem p;
        double x0, z;
    };
    std::vector<Case> cases{
        {skew_call(0.9, 1.0), -0.5, 0.8},
        {sticky_shifted(0.28), -0.7, 0.4},
        {russian(0.1, 0.05, 0.3), 0.05, 0.5},
        {gbm_call(0.05, 0.09, 0.1, 1.0), 1.1, 1.6},
    };
    for (const auto& c : cases) {
        auto pair = c.p.diffusion.fundamental_pair_for(c.p.alpha);
        double expected = c.p.reward.g(c.z) * pair.psi(c.x0) / pair.psi(c.z);
        McEstimate e = mc_policy_value(c.p, c.x0, c.z, 40000, 9);
        CAPTURE(c.p.diffusion.name());
        CHECK(std::abs(e.mean - expected) <= 3.0 * e.std_error);
    }
}
