#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stopside/catalog.hpp"
#include "stopside/solver.hpp"

namespace testing_problems {

using namespace stopside;

/// Reference values computed independently of the library.
inline double gbm_gamma1(double mu, double sigma2, double alpha)
{
    double a = 0.5 - mu / sigma2;
    return a + std::sqrt(a * a + 2.0 * alpha / sigma2);
}

inline double gbm_threshold(double mu, double sigma2, double alpha, double strike)
{
    double g1 = gbm_gamma1(mu, sigma2, alpha);
    return strike * g1 / (g1 - 1.0);
}

inline double russian_threshold(double alpha, double r, double sigma)
{
    double delta = (r + 0.5 * sigma * sigma) / sigma;
    double gamma = std::sqrt(2.0 * alpha + delta * delta);
    return std::log(((gamma + delta) / (gamma - delta)) * ((gamma - delta + sigma) / (gamma + delta - sigma)))
         / (2.0 * gamma);
}

inline const double kAlpha1 = (std::sqrt(5.0) - 1.0) * (std::sqrt(5.0) - 1.0) / 8.0;
inline const double kAlpha2 = 0.5;
inline const double kSkewThreshold = 0.82575;

/// Sticky BM with unit stickiness and g = (x+1)^+: x* maximises (x+1)/psi.
/// On x < 0, psi = e^{gx}; on x > 0, psi = cosh(gx) + (g+2a)/g sinh(gx).
inline double sticky_threshold(double alpha)
{
    double g = std::sqrt(2.0 * alpha);
    if (alpha > kAlpha2)
        return 1.0 / g - 1.0;
    if (alpha >= kAlpha1)
        return 0.0;
    double c = (g + 2.0 * alpha) / g;
    auto h = [&](double x) {
        double psi = std::cosh(g * x) + c * std::sinh(g * x);
        double dpsi = g * (std::sinh(g * x) + c * std::cosh(g * x));
        return psi - (x + 1.0) * dpsi;
    };
    double lo = 0.0, hi = 1.0;
    while (h(hi) > 0.0)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline Problem gbm_call(double mu, double sigma2, double alpha, double strike)
{
    return Problem{gbm(mu, std::sqrt(sigma2)), call_reward(strike), alpha};
}

inline Problem bm_call(double alpha)
{
    return Problem{standard_bm(), call_reward(0.0), alpha};
}

inline Problem skew_call(double beta, double alpha)
{
    return Problem{skew_bm(beta), call_reward(0.0), alpha};
}

inline Problem skew_shifted(double beta, double alpha)
{
    return Problem{skew_bm(beta), shifted_call_reward(1.0), alpha};
}

inline Problem sticky_shifted(double alpha)
{
    return Problem{sticky_bm(1.0), shifted_call_reward(1.0), alpha};
}

inline Problem russian(double alpha, double r, double sigma)
{
    return Problem{reflected_bm_drift(r, sigma), exponential_reward(sigma), alpha};
}

struct Named {
    std::string name;
    Problem problem;
};

/// Every worked example, each with its expected threshold.
inline std::vector<std::pair<Named, double>> worked_examples()
{
    std::vector<std::pair<Named, double>> v;
    v.push_back({{"gbm(0,2,1,1)", gbm_call(0.0, 2.0, 1.0, 1.0)}, gbm_threshold(0.0, 2.0, 1.0, 1.0)});
    v.push_back({{"gbm(0.05,0.09,0.1,1)", gbm_call(0.05, 0.09, 0.1, 1.0)}, gbm_threshold(0.05, 0.09, 0.1, 1.0)});
    v.push_back({{"gbm(-0.1,0.25,0.2,3)", gbm_call(-0.1, 0.25, 0.2, 3.0)}, gbm_threshold(-0.1, 0.25, 0.2, 3.0)});
    for (double a : {0.125, 0.5, 1.0, 2.0})
        v.push_back({{"bm(" + std::to_string(a) + ")", bm_call(a)}, 1.0 / std::sqrt(2.0 * a)});
    v.push_back({{"skew(0.9,1)", skew_call(0.9, 1.0)}, kSkewThreshold});
    v.push_back({{"skew(1/3,1/8)", skew_shifted(1.0 / 3.0, 0.125)}, 0.0});
    v.push_back({{"sticky(0.1)", sticky_shifted(0.1)}, sticky_threshold(0.1)});
    v.push_back({{"sticky(alpha1)", sticky_shifted(kAlpha1)}, 0.0});
    v.push_back({{"sticky(0.28)", sticky_shifted(0.28)}, 0.0});
    v.push_back({{"sticky(0.5)", sticky_shifted(0.5)}, 0.0});
    v.push_back({{"sticky(2)", sticky_shifted(2.0)}, sticky_threshold(2.0)});
    v.push_back({{"russian(0.1,0.05,0.3)", russian(0.1, 0.05, 0.3)}, russian_threshold(0.1, 0.05, 0.3)});
    v.push_back({{"russian(0.5,0.1,0.5)", russian(0.5, 0.1, 0.5)}, russian_threshold(0.5, 0.1, 0.5)});
    return v;
}

}  // namespace testing_problems
