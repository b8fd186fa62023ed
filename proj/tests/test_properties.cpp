#include <doctest.h>

#include "properties.hpp"
#include "stopside/smoothfit.hpp"

using namespace stopside;
using namespace testing_problems;
using namespace testing_properties;

TEST_CASE("fundamental pair invariants on every catalog diffusion")
{
    for (const auto& c : catalog_cases()) {
        CAPTURE(c.name);
        CHECK(green_symmetry(c) <= 1.0);
        CHECK(wronskian_spread(c) <= 1.0);
        CHECK(resolvent_normalization(c) <= 1.0);
        CHECK(alpha_harmonicity(c) <= 1.0);
    }
}

TEST_CASE("solution invariants on every worked example")
{
    for (const auto& [named, expected] : worked_examples()) {
        CAPTURE(named.name);
        const Problem& p = named.problem;
        SolveOptions opts;
        Solution s = solve_right_sided(p, opts);
        REQUIRE(s.status == SolveStatus::Verified);
        CHECK(s.k >= 0.0);
        CHECK(dominance(p, s) <= 1.0);
        CHECK(scaling_covariance(p, s) <= 1.0);
        CHECK(threshold_rule_optimality(p, s) <= 1.0);

        double scale = std::max(1.0, std::abs(p.reward.g(s.x_star)));
        CHECK(threshold_residual(p, s.x_star, opts) >= -1e-9 * scale);
        if (s.speed_atom == 0.0)
            CHECK(std::abs(s.residual) <= 1e-8 * scale);
        if (s.conditions.threshold.relation == Relation::Greater)
            CHECK(s.conditions.atom_bound.holds);

        for (double x : {s.x_star + 0.3, s.x_star + 1.7})
            CHECK(s.value(x) == doctest::Approx(p.reward.g(x)));
        auto pair = p.diffusion.fundamental_pair_for(p.alpha);
        double below = s.x_star - 0.4;
        if (p.diffusion.interval().contains(below))
            CHECK(s.value(below)
                  == doctest::Approx(p.reward.g(s.x_star) * pair.psi(below) / pair.psi(s.x_star)).epsilon(1e-12));
    }
}

TEST_CASE("excessivity spot check")
{
    for (const auto& [named, expected] : worked_examples()) {
        CAPTURE(named.name);
        Solution s = solve_right_sided(named.problem);
        CHECK(excessivity(named.problem, s, 20000, 99) <= 1.0);
    }
}

TEST_CASE("Monte Carlo hitting identity")
{
    CHECK(mc_identity(bm_call(0.5), -0.3, 1.0, 100000, 1) <= 1.0);
    CHECK(mc_identity(skew_call(0.9, 1.0), -0.4, kSkewThreshold, 100000, 2) <= 1.0);
    CHECK(mc_identity(sticky_shifted(0.28), -0.5, 0.5, 100000, 3) <= 1.0);
    CHECK(mc_identity(gbm_call(0.05, 0.09, 0.1, 1.0), 1.2, 2.0, 100000, 4) <= 1.0);
    CHECK(mc_identity(russian(0.1, 0.05, 0.3), 0.0, 0.6, 100000, 5) <= 1.0);
}
