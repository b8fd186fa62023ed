#include "stopside/smoothfit.hpp"

#include <cmath>
#include <sstream>

namespace stopside {

namespace {

struct SidePair {
    double left = 0.0;
    double right = 0.0;
    bool ok = false;
};

SidePair both_sides(const ScalarFn& f, const ScalarFn& coord, double x, std::vector<std::string>& notes,
                    const char* what)
{
    SidePair out;
    try {
        out.left = one_sided_derivative(f, coord, x, Side::Left);
        out.right = one_sided_derivative(f, coord, x, Side::Right);
        out.ok = true;
    } catch (const Error& e) {
        if (!e.is_numeric())
            throw;
        notes.push_back(std::string(what) + ": " + e.what());
    }
    return out;
}

bool agree(const SidePair& s, double tol)
{
    return s.ok && std::abs(s.left - s.right) <= tol * (1.0 + std::abs(s.left));
}

FitState state_of(const SidePair& s, double tol)
{
    if (!s.ok)
        return FitState::Inconclusive;
    return agree(s, tol) ? FitState::Holds : FitState::Fails;
}

bool near_any(double x, const std::vector<double>& pts)
{
    for (double p : pts)
        if (std::abs(p - x) <= 1e-9 * std::max(1.0, std::abs(x)))
            return true;
    return false;
}

}  // namespace

const char* to_string(FitState s)
{
    switch (s) {
    case FitState::Holds: return "holds";
    case FitState::Fails: return "fails";
    case FitState::Inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(FitPrediction p)
{
    switch (p) {
    case FitPrediction::PsiDifferentiability: return "psi_differentiability";
    case FitPrediction::ScaleSmoothFit: return "scale_smooth_fit";
    case FitPrediction::SmoothFit: return "smooth_fit";
    }
    return "?";
}

SmoothFitReport diagnose(const Problem& p, const Solution& sol, double tol)
{
    if (sol.status != SolveStatus::Verified)
        throw Error(ErrorKind::InvalidArgument, "smooth-fit diagnostics need a Verified solution");
    if (!(tol > 0.0))
        throw Error(ErrorKind::InvalidArgument, "smooth-fit tolerance must be positive");
    const auto& d = p.diffusion;
    const auto& iv = d.interval();
    const double xs = sol.x_star;
    if (!(xs > iv.left && xs < iv.right))
        throw Error(ErrorKind::OutOfDomain, "smooth-fit diagnostics need an interior threshold");

    SmoothFitReport rep;
    rep.tol = tol;
    auto pair = d.fundamental_pair_for(p.alpha);
    const bool right = p.side == ProblemSide::Right;
    ScalarFn v = sol.value ? sol.value : value_function(p, xs);
    ScalarFn ident = [](double x) { return x; };
    ScalarFn harmonic = right ? pair.psi : pair.phi;
    ScalarFn other = right ? pair.phi : pair.psi;
    ScalarFn ratio = [v, other](double x) { return v(x) / other(x); };

    auto dx = both_sides(v, ident, xs, rep.notes, "dV/dx");
    auto ds = both_sides(v, d.scale().value, xs, rep.notes, "dV/ds");
    auto dh = both_sides(v, harmonic, xs, rep.notes, right ? "dV/dpsi" : "dV/dphi");
    auto dr = both_sides(ratio, d.scale().value, xs, rep.notes, right ? "d(V/phi)/ds" : "d(V/psi)/ds");

    rep.dv_dx_left = dx.left;
    rep.dv_dx_right = dx.right;
    rep.dv_ds_left = ds.left;
    rep.dv_ds_right = ds.right;
    rep.dv_dpsi_left = dh.left;
    rep.dv_dpsi_right = dh.right;
    rep.dv_phi_ds_left = dr.left;
    rep.dv_phi_ds_right = dr.right;
    rep.sf = state_of(dx, tol);
    rep.ssf = state_of(ds, tol);
    rep.dv_dpsi_exists = agree(dh, tol);
    rep.dv_phi_ds_exists = agree(dr, tol);

    const double gs = std::max(1.0, std::abs(p.reward.g(xs)));
    if (sol.k <= tol * gs) {
        rep.predicted_by.push_back(FitPrediction::PsiDifferentiability);
        if (d.speed().atom_mass(xs) == 0.0) {
            rep.predicted_by.push_back(FitPrediction::ScaleSmoothFit);
            bool g_smooth = !near_any(xs, p.reward.kinks);
            bool psi_smooth = !near_any(xs, d.singular_points());
            if (g_smooth && psi_smooth && dx.ok) {
                auto dpsi = both_sides(harmonic, ident, xs, rep.notes, "psi'");
                auto dscale = both_sides(d.scale().value, ident, xs, rep.notes, "s'");
                bool nonzero = dpsi.ok && dscale.ok && dpsi.right != 0.0 && dscale.right != 0.0 && dx.right != 0.0;
                if (nonzero && agree(dpsi, tol) && agree(dscale, tol))
                    rep.predicted_by.push_back(FitPrediction::SmoothFit);
            }
        }
    }
    return rep;
}

std::string TableRow::to_text() const
{
    std::ostringstream os;
    os.precision(10);
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    os << "alpha=" << alpha << " | x*" << (x_star_sign == "0" ? "=" : "") << x_star_sign << " | " << threshold << " | "
       << atom_bound << " | " << yn(sf_and_ssf) << " | " << yn(dv_dpsi_exists) << " | " << yn(dv_phi_ds_exists);
    return os.str();
}

TableRow table_row(const Problem& p, const Solution& sol, const SmoothFitReport& fit)
{
    TableRow row;
    row.alpha = p.alpha;
    row.x_star = sol.x_star;
    if (std::abs(sol.x_star) <= 1e-9)
        row.x_star_sign = "0";
    else
        row.x_star_sign = sol.x_star > 0.0 ? ">0" : "<0";
    row.threshold = to_string(sol.conditions.threshold.relation);
    row.atom_bound = to_string(sol.conditions.atom_bound.relation);
    row.sf_and_ssf = fit.sf == FitState::Holds && fit.ssf == FitState::Holds;
    row.dv_dpsi_exists = fit.dv_dpsi_exists;
    row.dv_phi_ds_exists = fit.dv_phi_ds_exists;
    return row;
}

TableRow table_row(const Problem& p, const Solution& sol)
{
    return table_row(p, sol, diagnose(p, sol));
}

}  // namespace stopside
