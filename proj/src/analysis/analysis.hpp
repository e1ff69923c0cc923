#pragma once

#include <optional>

#include "analysis/lmis.hpp"

namespace flextube {

struct NoStabilizingController : std::runtime_error {
    explicit NoStabilizingController(const std::string& what) : std::runtime_error(what) {}
};

struct AnalysisOptions {
    double eps = 1e-7;       // strict-LMI margin
    double gamma_lo = 1e-4;
    double gamma_hi = 1e4;
    int bisect_iters = 12;   // log-space bisection steps on gamma
    double reg_weight = 1e-8;  // trace regularizer removing homogeneous rays
    ipm::Options solver;
};

// Certified peak-to-peak analysis of a fixed closed loop against the
// multiplier class: storage P, two admissible pairs, and the bound gamma
// with its dissipation constant mu.
struct AnalysisCertificate {
    SymMatrix p;  // over [psi; theta_bar]
    VectorXd coeffs1, coeffs2;
    MultiplierPair pair1, pair2;
    double mu = 0.0, gamma = 0.0, rho = 0.0;
    double margin_stab = 0.0, margin_perf = 0.0, margin_coupling = 0.0;

    double alpha() const { return rho * rho / (1.0 - rho * rho); }
    double beta() const { return alpha() * (gamma - mu); }
    MultiplierPair combined_pair() const;  // (M1+M2, X1+X2)
};

using RowwiseCertificates = std::vector<AnalysisCertificate>;

// Numeric re-verification of the three analysis LMIs; margins are
// psd_margin of the <=0-oriented expressions (coupling reported as its
// minimum eigenvalue).
struct AnalysisMargins {
    double stab, perf, coupling_mineig;
    bool pass(double eps) const {
        return stab <= -eps / 2 && perf <= -eps / 2 && coupling_mineig >= eps / 2;
    }
};
AnalysisMargins verify_analysis(const Interconnection& sigma_rho, const MultiplierClass& cls,
                                const AnalysisCertificate& cert);

// Minimal certified gamma by bisection; each probe maximizes the LMI margin.
AnalysisCertificate analyze(const Interconnection& gk, const MultiplierClass& cls, double rho,
                            const AnalysisOptions& opts = {});

// Componentwise certificates: one analysis per constraint row, each bracketed
// above by the full certificate's gamma, optionally line-searching rho.
RowwiseCertificates analyze_rowwise(const Interconnection& gk, const MultiplierClass& cls,
                                    const std::vector<double>& rho_grid,
                                    const AnalysisOptions& opts = {});

// Restriction of one output channel to selected rows.
Interconnection select_output_rows(const Interconnection& ic, const std::string& output,
                                   const std::vector<int>& rows);

// Certificate that the estimation-error dissipation LMIs hold for a fixed
// estimator: storage over [psi; dtheta_bar; lam_bar], two admissible pairs,
// and the error bound constants (mu_o, gamma_o).
struct EstimatorAnalysisCertificate {
    SymMatrix p_o;
    VectorXd coeffs3, coeffs4;
    MultiplierPair pair3, pair4;
    double mu_o = 0.0, gamma_o = 0.0, rho = 0.0;
    double margin_stab = 0.0, margin_perf = 0.0;

    double alpha() const { return rho * rho / (1.0 - rho * rho); }
    double beta_o() const { return alpha() * (gamma_o - mu_o); }
};

// Joint re-analysis of fixed (K, L): minimizes weight*gamma + gamma_o over
// the rho grid with a scalar search on gamma; returns the refined pair of
// certificates.
std::pair<AnalysisCertificate, EstimatorAnalysisCertificate> joint_refine(
    const Interconnection& gk, const Estimator& l, const MultiplierClass& cls,
    const std::vector<double>& rho_grid, double weight_gamma,
    const AnalysisOptions& opts = {});

struct BootstrapOptions {
    int max_rounds = 20;
    double q_weight0 = 1.0;
    AnalysisOptions analysis;
};

// Output-feedback controller heuristic: observer-based LQR on the
// rho-scaled plant with the uncertainty channel as a weighted disturbance,
// scalar-weight adaptation rounds, and a final analyze() verification.
// Only the verified result is trusted.
Controller bootstrap_controller(const Plant& g, const MultiplierClass& cls, double rho,
                                const BootstrapOptions& opts = {});

}  // namespace flextube
