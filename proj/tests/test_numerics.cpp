#include <doctest.h>

#include <cmath>
#include <random>

#include "stopside/numerics.hpp"

using namespace stopside;

namespace {

SpeedMeasure lebesgue(double c = 1.0)
{
    return SpeedMeasure{[c](double) { return c; }, {}, {}};
}

}  // namespace

TEST_CASE("integrate_against_measure: atoms counted by region inclusion")
{
    SpeedMeasure m{[](double) { return 2.0; }, {{0.0, 2.0}}, {}};
    auto one = [](double) { return 1.0; };
    CHECK(integrate_against_measure(one, m, RegionSpec::closed(-1, 1)) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(integrate_against_measure(one, m, RegionSpec::open_closed(0, 1)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(integrate_against_measure(one, m, RegionSpec::closed_open(0, 1)) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("integrate_against_measure: improper upper limit")
{
    auto f = [](double y) { return std::exp(-y); };
    double v = integrate_against_measure(f, lebesgue(2.0), RegionSpec::open_closed(1.0, INFINITY));
    CHECK(v == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("integrate_against_measure: improper lower limit and polynomial tail")
{
    auto f = [](double y) { return std::exp(y); };
    CHECK(integrate_against_measure(f, lebesgue(), RegionSpec::open_closed(-INFINITY, 0.0))
          == doctest::Approx(1.0).epsilon(1e-10));
    auto g = [](double y) { return 1.0 / (y * y); };
    CHECK(integrate_against_measure(g, lebesgue(), RegionSpec::open_closed(1.0, INFINITY))
          == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("integrate_against_measure: integrable endpoint singularity")
{
    auto f = [](double y) { return 1.0 / std::sqrt(y); };
    CHECK(integrate_against_measure(f, lebesgue(), RegionSpec::open_closed(0.0, 1.0))
          == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("integrate_against_measure: divergent tail throws")
{
    auto f = [](double) { return 1.0; };
    CHECK_THROWS_AS(integrate_against_measure(f, lebesgue(), RegionSpec::open_closed(0.0, INFINITY)), Error);
    try {
        integrate_against_measure(f, lebesgue(), RegionSpec::open_closed(0.0, INFINITY));
    } catch (const Error& e) {
        CHECK((e.kind() == ErrorKind::DivergentIntegral || e.kind() == ErrorKind::NonConvergent));
    }
}

TEST_CASE("integrate_against_measure: additivity on random piecewise-smooth integrands")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    QuadratureOptions opts;
    for (int trial = 0; trial < 20; ++trial) {
        double k = u(rng), c1 = u(rng), c2 = u(rng);
        auto f = [=](double y) { return std::abs(y - k) + c1 * std::sin(3 * y) + c2 * y * y; };
        SpeedMeasure m{[](double y) { return 1.0 + y * y; }, {{0.3, 0.7}}, {}};
        std::vector<double> bp{k};
        double a = -1.5, b = u(rng) * 0.5, c = 1.7;
        double left = integrate_against_measure(f, m, RegionSpec::open_closed(a, b), opts, bp);
        double right = integrate_against_measure(f, m, RegionSpec::open_closed(b, c), opts, bp);
        double whole = integrate_against_measure(f, m, RegionSpec::open_closed(a, c), opts, bp);
        CHECK(std::abs(left + right - whole) <= 2.0 * opts.rel_tol * std::max(1.0, std::abs(whole)));
    }
}

TEST_CASE("integrate_against_measure: adding an atom shifts the integral by f(p) m0")
{
    auto f = [](double y) { return std::cos(y) + 2.0; };
    SpeedMeasure plain{[](double) { return 1.0; }, {}, {}};
    SpeedMeasure atom{[](double) { return 1.0; }, {{0.5, 1.25}}, {}};
    double base = integrate_against_measure(f, plain, RegionSpec::closed(0.0, 1.0));
    double with = integrate_against_measure(f, atom, RegionSpec::closed(0.0, 1.0));
    CHECK(with - base == doctest::Approx(f(0.5) * 1.25).epsilon(1e-10));
    SpeedMeasure edge{[](double) { return 1.0; }, {{1.0, 1.25}}, {}};
    CHECK(integrate_against_measure(f, edge, RegionSpec::closed_open(0.0, 1.0)) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("integrate_finite matches antiderivatives")
{
    CHECK(integrate_finite([](double x) { return x * x; }, 0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-12));
    std::vector<double> bp{0.0};
    CHECK(integrate_finite([](double x) { return std::abs(x); }, -1.0, 2.0, {}, bp)
          == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("find_largest_root")
{
    auto h = [](double x) { return (x - 1.0) * (x - 3.0); };
    CHECK(find_largest_root(h, 0.0, 10.0, 1e-12) == doctest::Approx(3.0).epsilon(1e-10));
    auto q = [](double x) { return x * x - 2.0; };
    CHECK(find_largest_root(q, 0.0, 4.0, 1e-13) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(find_largest_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-10), Error);
}

TEST_CASE("find_largest_root: tangential root")
{
    auto h = [](double x) { return (x - 0.3) * (x - 0.3); };
    double r = find_largest_root(h, -1.0, 1.0, 1e-10);
    CHECK(std::abs(h(r)) <= 1e-10 * (1.0 + 1.69));
    CHECK(r == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("find_largest_root: residual bound on random cubics")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 30; ++i) {
        double a = u(rng), b = u(rng), c = u(rng);
        auto h = [=](double x) { return (x - a) * (x - b) * (x - c); };
        double r = find_largest_root(h, -4.0, 4.0, 1e-12);
        CHECK(r == doctest::Approx(std::max({a, b, c})).epsilon(1e-8));
    }
}

TEST_CASE("one_sided_derivative")
{
    auto id = [](double x) { return x; };
    CHECK(one_sided_derivative([](double x) { return x * x; }, id, 1.0, Side::Right)
          == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(one_sided_derivative([](double x) { return std::abs(x); }, id, 0.0, Side::Left)
          == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(one_sided_derivative([](double x) { return std::abs(x); }, id, 0.0, Side::Right)
          == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(one_sided_derivative([](double x) { return std::exp(2 * x); }, id, 0.5, Side::Left)
          == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-7));
    CHECK(one_sided_derivative([](double x) { return x * x * x - x; }, id, -1.3, Side::Right)
          == doctest::Approx(3 * 1.69 - 1).epsilon(1e-7));
    // Derivative with respect to another coordinate.
    CHECK(one_sided_derivative([](double x) { return x * x; }, [](double x) { return 2 * x; }, 1.0, Side::Right)
          == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("neville_extrapolate recovers polynomial limits")
{
    std::vector<double> t{1.0, 0.5, 0.25};
    std::vector<double> y;
    for (double s : t)
        y.push_back(3.0 + 2.0 * s - s * s);
    CHECK(neville_extrapolate(t, y, 0.0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("option validation")
{
    CHECK_THROWS_AS(RegionSpec::closed(1.0, 0.0).validate(), Error);
    QuadratureOptions bad{-1.0, 1e-12, 60};
    CHECK_THROWS_AS(bad.validate(), Error);
}
