#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stopside/diffusion.hpp"
#include "stopside/reward.hpp"

namespace stopside {

enum class ProblemSide { Right, Left };

struct Problem {
    Diffusion diffusion;
    Reward reward;
    double alpha;
    ProblemSide side = ProblemSide::Right;

    void validate() const;
};

struct SolveOptions {
    std::optional<double> search_hi;   ///< nullopt = expand automatically
    int grid_points = 2048;
    double root_tol = 1e-10;
    int verify_samples = 512;
    QuadratureOptions quadrature{1e-11, 1e-14, 60};

    void validate() const;
};

enum class Relation { Equal, Greater, Less };

const char* to_string(Relation r);

struct ConditionCheck {
    bool holds = false;
    Relation relation = Relation::Equal;
    double value = 0.0;   ///< signed quantity the relation is read from
    std::string detail;
};

/// Checks of the threshold characterisation at the candidate x*:
///  threshold:        g(x*) - psi(x*)/w * int_(x*,r] phi (alpha-L)g dm  >= 0
///  generator_sign:   (alpha-L)g >= 0 on (x*, r)
///  left_majorant:    g(x) <= g(x*) psi(x)/psi(x*) for x < x*
///  atom_bound:       g(x*) - psi(x*)/w * int_[x*,r] phi (alpha-L)g dm  <= 0
struct ConditionTable {
    ConditionCheck threshold;
    ConditionCheck generator_sign;
    ConditionCheck left_majorant;
    ConditionCheck atom_bound;
};

enum class SolveStatus { Verified, NotOneSided, Unverified };

const char* to_string(SolveStatus s);

/// Representing measure of V: density (alpha-L)g on (x*, r] plus an atom k at x*.
struct RepresentingMeasure {
    double atom_point = 0.0;
    double atom_weight = 0.0;
    double density_from = 0.0;
    std::string density;
};

struct Solution {
    ProblemSide side = ProblemSide::Right;
    double x_star = 0.0;
    double k = 0.0;
    ScalarFn value;
    RepresentingMeasure rep_measure;
    ConditionTable conditions;
    SolveStatus status = SolveStatus::NotOneSided;
    double rrc_point = 0.0;
    RrcReport rrc;
    double residual = 0.0;            ///< threshold residual at x*
    double speed_atom = 0.0;          ///< m({x*})
    std::string method;
    std::vector<double> other_roots;
    std::vector<std::string> diagnostics;
};

/// g(x) - psi(x)/w * int_(x,r] phi(y) (alpha-L)g(y) m(dy) for a right-sided
/// problem; for a left-sided one the mirrored residual evaluated at -x.
double threshold_residual(const Problem& p, double x, const SolveOptions& opts = {});

/// Largest root of the threshold residual followed by verification of the
/// remaining conditions. Left-sided problems are solved on the mirror image.
Solution solve_right_sided(const Problem& p, const SolveOptions& opts = {});

/// Threshold as the first point where int_[l,x] psi (alpha-L)g dm >= 0,
/// verified the same way as solve_right_sided.
Solution solve_sufficient(const Problem& p, const SolveOptions& opts = {});

/// V(x) = g(x) on the stopping side of x*, g(x*) psi(x)/psi(x*) on the other
/// (phi for left-sided problems).
ScalarFn value_function(const Problem& p, double x_star);

/// Expected discounted reward of stopping at the first entrance into [z, r)
/// (into (l, z] for left-sided problems) when starting from x.
double expected_reward_of_threshold(const Problem& p, double x, double z);

/// The problem seen through x -> -x with the side flipped.
Problem mirror_problem(const Problem& p);

}  // namespace stopside
