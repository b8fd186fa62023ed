#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stopside/numerics.hpp"

namespace stopside {

enum class Boundary { Natural, Reflecting };

/// State interval I with endpoints l < r (possibly infinite).
struct StateInterval {
    double left;
    double right;
    bool left_in_state = false;
    bool right_in_state = false;
    Boundary left_behavior = Boundary::Natural;
    Boundary right_behavior = Boundary::Natural;

    bool contains(double x) const;
    void validate() const;
};

/// Scale function s with one-sided derivatives ds/dx.
struct ScaleFunction {
    ScalarFn value;
    ScalarFn derivative_right;
    ScalarFn derivative_left;
    ScalarFn inverse;            ///< optional s^{-1}
    std::vector<double> kinks;   ///< points where the two derivatives differ

    double derivative(double x, Side side) const
    {
        return side == Side::Right ? derivative_right(x) : derivative_left(x);
    }
};

/// Increasing/decreasing solutions of alpha u = L u together with their
/// one-sided derivatives with respect to the scale function.
struct FundamentalPair {
    ScalarFn psi;
    ScalarFn phi;
    ScalarFn psi_ds_right;
    ScalarFn psi_ds_left;
    ScalarFn phi_ds_right;
    ScalarFn phi_ds_left;
    double wronskian = 0.0;
};

using PairFactory = std::function<FundamentalPair(double alpha)>;

/// Smooth-part coefficients: L f = a(x) f''/2 + b(x) f'.
struct LocalCoefficients {
    ScalarFn variance;
    ScalarFn drift;
};

using Rng = std::mt19937_64;

/// One step of an exact first-passage walk toward level z.
struct WalkStep {
    double next;
    double weight;   ///< discount factor contributed by the step
};

using PassageWalker = std::function<WalkStep(double x, double z, double alpha, Rng& rng)>;
using FixedTimeSampler = std::function<double(double x, double t, Rng& rng)>;

class Diffusion {
public:
    struct Parts {
        std::string name;
        StateInterval interval;
        ScaleFunction scale;
        SpeedMeasure speed;
        PairFactory pair;
        std::optional<LocalCoefficients> coefficients;
        PassageWalker walker;
        FixedTimeSampler sampler;
    };

    explicit Diffusion(Parts parts);

    const std::string& name() const { return parts_.name; }
    const StateInterval& interval() const { return parts_.interval; }
    const ScaleFunction& scale() const { return parts_.scale; }
    const SpeedMeasure& speed() const { return parts_.speed; }
    const std::optional<LocalCoefficients>& coefficients() const { return parts_.coefficients; }
    const PassageWalker& walker() const { return parts_.walker; }
    const FixedTimeSampler& sampler() const { return parts_.sampler; }
    const Parts& parts() const { return parts_; }

    /// Pair for discount alpha; the Wronskian is evaluated at reference_point().
    FundamentalPair fundamental_pair_for(double alpha) const;

    /// Interior point used to evaluate the Wronskian.
    double reference_point() const;

    /// Speed atoms, scale kinks and density breakpoints, sorted.
    std::vector<double> singular_points() const;

    void require_in_state(double x, const char* what) const;

private:
    Parts parts_;
    double reference_;
};

/// G(x, y) = psi(min) phi(max) / w.
double green(const Diffusion& d, double alpha, double x, double y);
double green(const FundamentalPair& pair, double x, double y);

/// E_x[exp(-alpha H_z)].
double hitting_laplace(const Diffusion& d, double alpha, double x, double z);

/// Feller generator (d/dm)(d+/ds) f at x. Finite differences never straddle
/// the diffusion's singular points or the extra `barriers`.
double apply_generator(const Diffusion& d, const ScalarFn& f, double x, std::span<const double> barriers = {});

/// One-sided limit of (d/dm)(d+/ds) f as y -> x from the given side, by
/// extrapolating generator values sampled on that side.
double generator_limit(const Diffusion& d, const ScalarFn& f, double x, Side side,
                       std::span<const double> barriers = {});

/// Integral of G(x, y) u(y) m(dy) over the state interval.
double resolvent(const Diffusion& d, double alpha, const ScalarFn& u, double x, const QuadratureOptions& opts = {},
                 std::span<const double> breakpoints = {});

/// Diffusion of -X.
Diffusion reflect(const Diffusion& d);

}  // namespace stopside
