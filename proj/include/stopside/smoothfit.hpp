#pragma once

#include <string>
#include <vector>

#include "stopside/solver.hpp"

namespace stopside {

enum class FitState { Holds, Fails, Inconclusive };

const char* to_string(FitState s);

/// Results that the k = 0 / m({x*}) = 0 / differentiability hypotheses predict.
enum class FitPrediction { PsiDifferentiability, ScaleSmoothFit, SmoothFit };

const char* to_string(FitPrediction p);

struct SmoothFitReport {
    FitState sf = FitState::Inconclusive;
    FitState ssf = FitState::Inconclusive;
    bool dv_dpsi_exists = false;
    bool dv_phi_ds_exists = false;   ///< d(V/phi)/ds (d(V/psi)/ds for left-sided problems)
    double dv_dpsi_left = 0.0;
    double dv_dpsi_right = 0.0;
    double dv_ds_left = 0.0;
    double dv_ds_right = 0.0;
    double dv_dx_left = 0.0;
    double dv_dx_right = 0.0;
    double dv_phi_ds_left = 0.0;
    double dv_phi_ds_right = 0.0;
    double tol = 1e-6;
    std::vector<FitPrediction> predicted_by;
    std::vector<std::string> notes;
};

/// One-sided derivatives of V at x* in the x, s and psi coordinates (phi for
/// left-sided problems). Throws InvalidArgument unless the solution is Verified.
SmoothFitReport diagnose(const Problem& p, const Solution& sol, double tol = 1e-6);

struct TableRow {
    double alpha = 0.0;
    double x_star = 0.0;
    std::string x_star_sign;        ///< "<0", "0" or ">0"
    std::string threshold;          ///< "=" or ">"
    std::string atom_bound;         ///< "=" or "<"
    bool sf_and_ssf = false;
    bool dv_dpsi_exists = false;
    bool dv_phi_ds_exists = false;

    std::string to_text() const;
};

TableRow table_row(const Problem& p, const Solution& sol, const SmoothFitReport& fit);
TableRow table_row(const Problem& p, const Solution& sol);

}  // namespace stopside
