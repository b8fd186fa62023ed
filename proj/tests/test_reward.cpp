#include <doctest.h>

#include <cmath>
#include <random>

#include "stopside/catalog.hpp"
#include "stopside/reward.hpp"

using namespace stopside;

TEST_CASE("generator image examples")
{
    CHECK(generator_image(gbm(0.05, 0.3), call_reward(1.0), 0.1, 2.0) == doctest::Approx(0.0).epsilon(1e-10));
    // g = x on the positive half line of skew BM: (alpha - L) g = alpha y.
    for (double y : {0.5, 1.0, 3.0})
        CHECK(generator_image(skew_bm(0.9), call_reward(0.0), 1.0, y) == doctest::Approx(y).epsilon(1e-8));
    const double alpha = 0.1, r = 0.05, sigma = 0.3;
    Diffusion d = reflected_bm_drift(r, sigma);
    Reward g = exponential_reward(sigma);
    for (double y : {0.2, 1.0, 2.5})
        CHECK(generator_image(d, g, alpha, y) == doctest::Approx((alpha + r) * std::exp(sigma * y)).epsilon(1e-8));
}

TEST_CASE("closed-form generator image agrees with Feller differencing")
{
    struct Case {
        Diffusion d;
        Reward g;
        double alpha;
        double lo, hi;
    };
    std::vector<Case> cases{
        {gbm(0.05, 0.3), call_reward(1.0), 0.1, 1.05, 4.0},
        {gbm(-0.1, 0.5), call_reward(3.0), 0.2, 3.1, 8.0},
        {standard_bm(), call_reward(0.0), 0.5, 0.05, 3.0},
        {skew_bm(0.9), call_reward(0.0), 1.0, 0.05, 3.0},
        {sticky_bm(1.0), shifted_call_reward(1.0), 0.28, 0.05, 3.0},
        {reflected_bm_drift(0.05, 0.3), exponential_reward(0.3), 0.1, 0.05, 3.0},
    };
    for (const auto& c : cases) {
        for (int i = 0; i < 20; ++i) {
            double y = c.lo + (c.hi - c.lo) * (i + 0.5) / 20.0;
            double closed = generator_image(c.d, c.g, c.alpha, y);
            double numeric = c.alpha * c.g.g(y) - apply_generator(c.d, c.g.g, y, c.g.kinks);
            CHECK(closed == doctest::Approx(numeric).epsilon(1e-5));
        }
    }
}

TEST_CASE("right regularity condition on the worked examples")
{
    SUBCASE("gbm call, alpha > mu")
    {
        auto rep = check_rrc(gbm(0.05, 0.3), call_reward(1.0), 0.1, 1.0);
        CHECK(rep.integrability_ok);
        CHECK(rep.limit_ok);
    }
    SUBCASE("gbm call, alpha <= mu")
    {
        auto rep = check_rrc(gbm(0.2, 0.3), call_reward(1.0), 0.1, 1.0);
        CHECK_FALSE(rep.limit_ok);
    }
    SUBCASE("brownian examples")
    {
        CHECK(check_rrc(standard_bm(), call_reward(0.0), 0.5, 0.0).limit_ok);
        CHECK(check_rrc(skew_bm(0.9), call_reward(0.0), 1.0, 0.0).limit_ok);
        CHECK(check_rrc(skew_bm(1.0 / 3.0), shifted_call_reward(1.0), 0.125, -1.0).limit_ok);
        Reward g = shifted_call_reward(1.0);
        Diffusion d = sticky_bm(1.0);
        auto rep = check_rrc(d, g, 0.28, default_rrc_point(d, g));
        CHECK(rep.integrability_ok);
        CHECK(rep.limit_ok);
    }
    SUBCASE("russian")
    {
        auto rep = check_rrc(reflected_bm_drift(0.05, 0.3), exponential_reward(0.3), 0.1, 0.0);
        CHECK(rep.integrability_ok);
        CHECK(rep.limit_ok);
    }
}

TEST_CASE("default rrc point")
{
    CHECK(default_rrc_point(gbm(0.0, 1.0), call_reward(2.0)) == 2.0);
    CHECK(default_rrc_point(standard_bm(), call_reward(0.0)) == 0.0);
    // (x+1)^+ is linear across the sticky point, so x1 stays at the support edge.
    CHECK(default_rrc_point(sticky_bm(1.0), shifted_call_reward(1.0)) == -1.0);
}

TEST_CASE("expression parser")
{
    Reward a = parse_reward("pos(x-1)");
    CHECK(a.g(3.0) == doctest::Approx(2.0));
    CHECK(a.g(0.0) == 0.0);
    REQUIRE(a.kinks.size() == 1);
    CHECK(a.kinks[0] == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(a.support_left);
    CHECK(*a.support_left == doctest::Approx(1.0).epsilon(1e-12));

    Reward b = parse_reward("exp(0.5*x)");
    CHECK(b.g(2.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(b.kinks.empty());

    Reward c = parse_reward("max(x, 0) + 2*pos(x+1)^2 + ln(exp(1))");
    CHECK(c.g(1.0) == doctest::Approx(1.0 + 8.0 + 1.0));

    Reward d = parse_reward("-x + 3", -2.0, 2.0);
    CHECK(d.g(1.0) == doctest::Approx(2.0));
}

TEST_CASE("expression parser round-trip on random points")
{
    struct Case {
        const char* text;
        double (*f)(double);
    };
    const Case cases[] = {
        {"pos(x-1)", [](double x) { return std::max(x - 1.0, 0.0); }},
        {"pos(x+1)", [](double x) { return std::max(x + 1.0, 0.0); }},
        {"exp(0.5*x)", [](double x) { return std::exp(0.5 * x); }},
        {"max(x, 2*x) / 4 + 3", [](double x) { return std::max(x, 2 * x) / 4 + 3; }},
        {"ln(x^2 + 1) + x*x", [](double x) { return std::log(x * x + 1) + x * x; }},
    };
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (const auto& c : cases) {
        Reward r = parse_reward(c.text, -10.0, 10.0);
        for (int i = 0; i < 50; ++i) {
            double x = u(rng);
            CHECK(r.g(x) == doctest::Approx(c.f(x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("expression parser errors")
{
    try {
        parse_reward("pos(x-");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 6);
        CHECK_FALSE(e.expected().empty());
    }
    CHECK_THROWS_AS(parse_reward("sin(x)"), ParseError);
    CHECK_THROWS_AS(parse_reward("x +"), ParseError);
    CHECK_THROWS_AS(parse_reward("x - 5"), Error);   // negative on the sampled window
}

TEST_CASE("reward transformations")
{
    Reward g = call_reward(1.0);
    Reward m = reflect_reward(g);
    CHECK(m.g(-3.0) == doctest::Approx(2.0));
    REQUIRE(m.rrc_point.has_value() == g.rrc_point.has_value());
    Reward s = scale_reward(g, 2.5);
    CHECK(s.g(3.0) == doctest::Approx(5.0));
    CHECK(generator_image(gbm(0.0, 1.0), s, 0.5, 2.0)
          == doctest::Approx(2.5 * generator_image(gbm(0.0, 1.0), g, 0.5, 2.0)));
    CHECK_THROWS_AS(scale_reward(g, -1.0), Error);
}

TEST_CASE("non-negativity check")
{
    Reward bad = call_reward(0.0);
    bad.g = [](double x) { return x; };
    CHECK_THROWS_AS(bad.check_nonnegative(-1.0, 1.0), Error);
    CHECK_NOTHROW(call_reward(0.0).check_nonnegative(-1.0, 1.0));
}
