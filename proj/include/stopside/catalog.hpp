#pragma once

#include <map>
#include <string>
#include <vector>

#include "stopside/diffusion.hpp"
#include "stopside/reward.hpp"

namespace stopside {

struct ParamSpec {
    std::string name;
    double lo;
    double hi;
    bool lo_open;
    bool hi_open;
    double default_value;
    std::string description;

    bool accepts(double v) const;
    std::string range_text() const;
};

using ParamMap = std::map<std::string, double>;

struct CatalogEntry {
    std::string name;
    std::string description;
    std::vector<ParamSpec> parameter_schema;
    std::function<Diffusion(const ParamMap&)> build;
};

const std::vector<CatalogEntry>& catalog_entries();

/// Throws InvalidArgument for an unknown name.
const CatalogEntry& catalog_entry(const std::string& name);

/// Fills defaults, rejects unknown or out-of-range parameters, then builds.
Diffusion build_diffusion(const std::string& name, const ParamMap& params);

/// Brownian motion on R: s(x) = x, m(dx) = 2dx.
Diffusion standard_bm();

/// X = x exp(sigma W + (mu - sigma^2/2) t) on (0, inf).
Diffusion gbm(double mu, double sigma);

/// Unit-variance Brownian motion with drift -delta, delta = (r + sigma^2/2)/sigma,
/// reflected at 0. psi(0) = phi(0) = 1.
Diffusion reflected_bm_drift(double r_rate, double sigma);

/// Skew Brownian motion with parameter beta: beta f'(0+) = (1-beta) f'(0-).
Diffusion skew_bm(double beta);

/// Brownian motion with speed measure 2dx + 2 stickiness delta_0.
Diffusion sticky_bm(double stickiness = 1.0);

/// Roots gamma1 > 0 > gamma2 of sigma^2 g(g-1)/2 + mu g - alpha = 0.
std::pair<double, double> gbm_exponents(double mu, double sigma, double alpha);

/// (x - K)^+
Reward call_reward(double strike);

/// (x + c)^+
Reward shifted_call_reward(double shift);

/// exp(sigma x)
Reward exponential_reward(double sigma);

}  // namespace stopside
