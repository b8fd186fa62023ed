#include <doctest.h>

#include <cmath>

#include "problems.hpp"
#include "stopside/catalog.hpp"
#include "stopside/solver.hpp"

using namespace stopside;
using namespace testing_problems;

TEST_CASE("threshold residual examples")
{
    CHECK(std::abs(threshold_residual(bm_call(0.5), 1.0)) <= 1e-9);
    Problem skew = skew_call(0.9, 1.0);
    double scale = std::max(1.0, kSkewThreshold);
    CHECK(std::abs(threshold_residual(skew, kSkewThreshold)) <= 5e-5 * scale);
    CHECK(std::abs(threshold_residual(sticky_shifted(kAlpha1), 0.0)) <= 1e-8);
    // Positive past the threshold, negative before it.
    CHECK(threshold_residual(bm_call(0.5), 1.5) > 0.0);
    CHECK(threshold_residual(bm_call(0.5), 0.5) < 0.0);
}

TEST_CASE("solve_right_sided on the worked examples")
{
    SUBCASE("gbm")
    {
        Solution s = solve_right_sided(gbm_call(0.0, 2.0, 1.0, 1.0));
        CHECK(s.status == SolveStatus::Verified);
        CHECK(s.x_star == doctest::Approx((1.0 + std::sqrt(5.0)) / (std::sqrt(5.0) - 1.0)).epsilon(1e-9));
        CHECK(s.k == doctest::Approx(0.0));
        CHECK(s.rrc.limit_ok);
    }
    SUBCASE("skew, no smooth fit")
    {
        Solution s = solve_right_sided(skew_shifted(1.0 / 3.0, 0.125));
        CHECK(s.status == SolveStatus::Verified);
        CHECK(std::abs(s.x_star) <= 1e-10);
    }
    SUBCASE("sticky, strict threshold inequality")
    {
        Solution s = solve_right_sided(sticky_shifted(0.28));
        CHECK(s.status == SolveStatus::Verified);
        CHECK(s.x_star == 0.0);
        CHECK(s.k > 0.0);
        CHECK(s.conditions.threshold.relation == Relation::Greater);
        CHECK(s.conditions.atom_bound.holds);
        CHECK(s.speed_atom == doctest::Approx(2.0));
        // k is bounded by (alpha - L)g(x*) m({x*}).
        CHECK(s.k <= 0.28 * 1.0 * 2.0 + 1e-9);
    }
    SUBCASE("sticky below alpha1: positive threshold")
    {
        Solution s = solve_right_sided(sticky_shifted(0.1));
        CHECK(s.status == SolveStatus::Verified);
        CHECK(s.x_star == doctest::Approx(sticky_threshold(0.1)).epsilon(1e-9));
    }
    SUBCASE("sticky above alpha2: negative threshold")
    {
        Solution s = solve_right_sided(sticky_shifted(2.0));
        CHECK(s.status == SolveStatus::Verified);
        CHECK(s.x_star == doctest::Approx(-0.5).epsilon(1e-9));
    }
}

TEST_CASE("solution value function and representing measure")
{
    Problem p = bm_call(0.5);
    Solution s = solve_right_sided(p);
    REQUIRE(s.status == SolveStatus::Verified);
    CHECK(s.value(2.0) == doctest::Approx(2.0));
    CHECK(s.value(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(s.value(-3.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-9));
    CHECK(s.rep_measure.atom_point == s.x_star);
    CHECK(s.rep_measure.atom_weight == s.k);
    CHECK(s.k >= 0.0);
    for (double x = -3.0; x <= 4.0; x += 0.05)
        CHECK(s.value(x) >= p.reward.g(x) - 1e-10);
}

TEST_CASE("solve_sufficient agrees with the threshold method")
{
    SolveOptions opts;
    for (auto p : {bm_call(0.5), gbm_call(0.05, 0.09, 0.1, 1.0), skew_call(0.9, 1.0), russian(0.1, 0.05, 0.3)}) {
        Solution a = solve_right_sided(p, opts);
        Solution b = solve_sufficient(p, opts);
        CHECK(b.method == "sufficient");
        CHECK(b.status == SolveStatus::Verified);
        CHECK(std::abs(a.x_star - b.x_star) <= 10.0 * opts.root_tol * std::max(1.0, std::abs(a.x_star)));
    }
    Solution g = solve_sufficient(gbm_call(0.05, 0.09, 0.1, 1.0));
    CHECK(g.x_star == doctest::Approx(gbm_threshold(0.05, 0.09, 0.1, 1.0)).epsilon(1e-8));
}

TEST_CASE("left-sided problems are solved by mirroring")
{
    Problem p{standard_bm(), parse_reward("pos(-x)"), 0.5, ProblemSide::Left};
    Solution s = solve_right_sided(p);
    CHECK(s.side == ProblemSide::Left);
    CHECK(s.status == SolveStatus::Verified);
    CHECK(s.x_star == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(s.value(-2.0) == doctest::Approx(2.0));
    CHECK(s.value(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(threshold_residual(p, -1.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(expected_reward_of_threshold(p, 0.0, -1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("problems that are not one-sided")
{
    // The reward vanishes to the right of a convex kink, so the generator image
    // has negative mass there.
    Problem p{standard_bm(), parse_reward("pos(1 - x^2)", -5.0, 5.0), 0.5};
    Solution s = solve_right_sided(p);
    CHECK(s.status == SolveStatus::NotOneSided);
    CHECK_FALSE(s.diagnostics.empty());
}

TEST_CASE("sufficient method rejects multiple sign changes")
{
    // (alpha - L)g = e^{-x^2}(3/2 - 2x^2) changes sign twice.
    Problem p{standard_bm(), parse_reward("exp(-x^2)", -5.0, 5.0), 0.5};
    try {
        solve_sufficient(p);
        FAIL("expected HypothesisViolated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::HypothesisViolated);
    }
}

TEST_CASE("expected reward of a threshold rule")
{
    Problem p = bm_call(0.5);
    CHECK(expected_reward_of_threshold(p, 1.3, 1.3) == doctest::Approx(1.3));
    CHECK(expected_reward_of_threshold(p, 2.0, 1.0) == doctest::Approx(2.0));
    CHECK(expected_reward_of_threshold(p, 0.0, 2.0) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("input validation")
{
    Problem p = bm_call(0.5);
    p.alpha = -1.0;
    CHECK_THROWS_AS(solve_right_sided(p), Error);
    SolveOptions o;
    o.grid_points = 4;
    CHECK_THROWS_AS(solve_right_sided(bm_call(0.5), o), Error);
}

TEST_CASE("mirror_problem flips the side and the state space")
{
    Problem m = mirror_problem(gbm_call(0.0, 1.0, 0.5, 1.0));
    CHECK(m.side == ProblemSide::Left);
    CHECK(m.diffusion.interval().right == 0.0);
    CHECK(m.reward.g(-3.0) == doctest::Approx(2.0));
}
