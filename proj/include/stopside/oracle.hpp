#pragma once

#include <cstdint>
#include <vector>

#include "stopside/solver.hpp"

namespace stopside {

/// Birth-death chain on nodes placed uniformly in the scale coordinate.
struct ChainApprox {
    std::vector<double> grid;
    std::vector<double> up_prob;
    std::vector<double> down_prob;
    std::vector<double> expected_hold;
    std::vector<double> discount_per_step;
    bool lower_reflecting = false;   ///< lowest node pushes up instead of stopping
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long long n_paths = 0;
    std::uint64_t seed = 0;
    long long truncated = 0;   ///< paths cut off by the discount floor
};

/// Grid point maximizing g/psi (g/phi for left-sided problems); ties go to the
/// point furthest into the stopping side.
double ratio_argmax(const Problem& p, const std::vector<double>& grid);

/// Chain over [lo, hi] with spacing h in s. Singular points inside the window
/// become nodes.
ChainApprox build_chain(const Problem& p, double lo, double hi, double h);

/// Fixed point of V = max(g, beta (u V_up + d V_down)) with V = g at the
/// window ends (a reflecting lower end continues upward instead).
std::vector<double> chain_value(const Problem& p, const ChainApprox& chain, double tol = 1e-12);

/// Edge of the stopping run adjacent to the stopping side of the window.
double chain_frontier(const Problem& p, const ChainApprox& chain, const std::vector<double>& values);

/// E_x0[exp(-alpha H_z)] g(z) by exact first-passage walks.
McEstimate mc_policy_value(const Problem& p, double x0, double z, long long n_paths, std::uint64_t seed);

}  // namespace stopside
