#include <doctest.h>

#include <cmath>
#include <random>

#include "stopside/catalog.hpp"
#include "stopside/diffusion.hpp"

using namespace stopside;

TEST_CASE("standard BM Green function and hitting times")
{
    Diffusion d = standard_bm();
    CHECK(green(d, 0.5, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(green(d, 0.5, 0.0, 1.0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(green(d, 0.5, 1.0, 0.0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(hitting_laplace(d, 0.5, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(hitting_laplace(d, 0.5, 2.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(hitting_laplace(d, 0.5, 0.7, 0.7) == 1.0);
}

TEST_CASE("generator on standard BM")
{
    Diffusion d = standard_bm();
    CHECK(apply_generator(d, [](double x) { return x * x; }, 0.3) == doctest::Approx(1.0).epsilon(1e-6));
    auto pair = d.fundamental_pair_for(0.5);
    CHECK(apply_generator(d, pair.psi, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(apply_generator(d, [](double x) { return std::sin(x); }, 1.0)
          == doctest::Approx(-0.5 * std::sin(1.0)).epsilon(1e-6));
}

TEST_CASE("generator at a sticky point uses the atom")
{
    // For f = |x| the scale derivative jumps by 2 at 0 and m({0}) = 2 theta.
    for (double theta : {0.5, 1.0, 2.0}) {
        Diffusion d = sticky_bm(theta);
        double v = apply_generator(d, [](double x) { return std::abs(x); }, 0.0);
        CHECK(v == doctest::Approx(1.0 / theta).epsilon(1e-6));
    }
}

TEST_CASE("resolvent of standard BM")
{
    Diffusion d = standard_bm();
    CHECK(resolvent(d, 0.5, [](double) { return 1.0; }, 0.3) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(resolvent(d, 0.5, [](double) { return 0.0; }, 0.3) == 0.0);
    // R_alpha (alpha - L) f = f for f = exp(-x^2).
    const double a = 0.7;
    auto af = [a](double x) {
        double e = std::exp(-x * x);
        return a * e - 0.5 * (4 * x * x - 2) * e;
    };
    for (double x : {-1.0, 0.0, 0.4, 1.5})
        CHECK(resolvent(d, a, af, x) == doctest::Approx(std::exp(-x * x)).epsilon(1e-6));
}

TEST_CASE("reflecting skew BM swaps beta and 1 - beta")
{
    Diffusion r = reflect(skew_bm(0.9));
    Diffusion s = skew_bm(0.1);
    auto pr = r.fundamental_pair_for(1.0);
    auto ps = s.fundamental_pair_for(1.0);
    for (double x : {-1.5, -0.2, 0.3, 2.0}) {
        CHECK(pr.psi(x) / pr.psi(0.0) == doctest::Approx(ps.psi(x) / ps.psi(0.0)).epsilon(1e-12));
        CHECK(pr.phi(x) / pr.phi(0.0) == doctest::Approx(ps.phi(x) / ps.phi(0.0)).epsilon(1e-12));
    }
    CHECK(r.interval().left == -INFINITY);
    CHECK(r.singular_points() == s.singular_points());
}

TEST_CASE("sticky BM gluing condition")
{
    for (double alpha : {0.1, 0.5, 2.0}) {
        auto pair = sticky_bm(1.0).fundamental_pair_for(alpha);
        double jump = pair.psi_ds_right(0.0) - pair.psi_ds_left(0.0);
        CHECK(jump == doctest::Approx(2.0 * alpha * pair.psi(0.0)).epsilon(1e-8));
        double jump_phi = pair.phi_ds_right(0.0) - pair.phi_ds_left(0.0);
        CHECK(jump_phi == doctest::Approx(2.0 * alpha * pair.phi(0.0)).epsilon(1e-8));
    }
}

TEST_CASE("skew BM scale kink")
{
    Diffusion d = skew_bm(0.9);
    // beta f'(0+) = (1-beta) f'(0-) for functions in the domain: s' jumps accordingly.
    double ratio = d.scale().derivative_left(0.0) / d.scale().derivative_right(0.0);
    CHECK(ratio == doctest::Approx(0.9 / 0.1).epsilon(1e-12));
}

TEST_CASE("reflected BM with drift: reflecting end and pair normalisation")
{
    Diffusion d = reflected_bm_drift(0.05, 0.3);
    CHECK(d.interval().left == 0.0);
    CHECK(d.interval().left_in_state);
    CHECK(d.interval().left_behavior == Boundary::Reflecting);
    auto pair = d.fundamental_pair_for(0.1);
    CHECK(pair.psi(0.0) == doctest::Approx(1.0));
    CHECK(pair.phi(0.0) == doctest::Approx(1.0));
    CHECK(pair.psi_ds_right(0.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("state checks")
{
    Diffusion d = gbm(0.0, 1.0);
    CHECK_THROWS_AS(d.require_in_state(-1.0, "x"), Error);
    CHECK_NOTHROW(d.require_in_state(1.0, "x"));
    CHECK_THROWS_AS(hitting_laplace(d, 1.0, -1.0, 2.0), Error);
}
