#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stopside/diffusion.hpp"

namespace stopside {

using GeneratorImageFn = std::function<double(double alpha, double y)>;

/// Payoff g together with whatever analytic information is known about it.
struct Reward {
    std::string description;
    ScalarFn g;
    ScalarFn dg;    ///< optional g' (right derivative at kinks)
    ScalarFn d2g;   ///< optional g''
    GeneratorImageFn generator_image_closed_form;   ///< optional (alpha - L) g
    std::optional<double> rrc_point;
    ScalarFn extension;   ///< optional g~, equal to g from rrc_point on
    std::optional<double> support_left;   ///< g > 0 exactly to the right of this point
    std::vector<double> kinks;            ///< points where g is not differentiable

    /// Throws NegativeReward if a sampled value of g is negative.
    void check_nonnegative(double lo, double hi, int samples = 2001) const;
};

struct RrcReport {
    bool integrability_ok = false;
    bool limit_ok = false;
    double limit_estimate = 0.0;
    std::string details;
};

/// (alpha - L) g at y: closed form if present, then the smooth-part formula
/// from g', g'' and the local coefficients, otherwise Feller differencing.
double generator_image(const Diffusion& d, const Reward& rw, double alpha, double y);

/// x1 used when the reward does not specify one: the left edge of the support
/// of g, moved right past any point where g breaks the local domain
/// conditions of the generator (scale kinks, speed atoms, reflecting ends).
double default_rrc_point(const Diffusion& d, const Reward& rw);

/// C2 continuation of g below x1 in the scale coordinate, flattened toward the
/// left end.
ScalarFn default_extension(const Diffusion& d, const Reward& rw, double x1);

/// (alpha - L) g~ for the default continuation (valid below x1).
ScalarFn extension_generator_image(const Diffusion& d, const Reward& rw, double alpha, double x1);

RrcReport check_rrc(const Diffusion& d, const Reward& rw, double alpha, double x1);

/// Reward from the expression grammar; sampled over [lo, hi] for kinks,
/// support and non-negativity.
Reward parse_reward(const std::string& expr, double lo = -10.0, double hi = 10.0);

/// Reward of the mirrored problem: x -> g(-x).
Reward reflect_reward(const Reward& rw);

/// c * g for c > 0.
Reward scale_reward(const Reward& rw, double c);

/// Smallest x in [lo, hi] with g > 0 on (x, hi], by sampling and bisection;
/// nullopt if g is positive on the whole window.
std::optional<double> sampled_support_left(const ScalarFn& g, double lo, double hi, int samples = 4001);

}  // namespace stopside
