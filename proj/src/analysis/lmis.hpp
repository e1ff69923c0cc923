#pragma once

#include "iqc/iqc.hpp"
#include "numerics/conic.hpp"
#include "plant/system.hpp"

namespace flextube {

// Row stacks of the quadratic forms behind the dissipation LMIs. Every LMI
// in the analysis and estimator modules is a sum of congruences of these
// constant stacks with (possibly decision-variable) middle blocks.
struct LoopStacks {
    MatrixXd t_state;  // [I 0 0]
    MatrixXd t_next;   // [A B_p B_w]
    MatrixXd t_s;      // [C_s D_sp D_sw]
    MatrixXd t_perf;   // [C_z D_zp D_zw]  (z for the analysis loop, zo for the estimator loop)
    MatrixXd t_w;      // [0 0 I]
    int nstate = 0, npsi = 0, np = 0, nw = 0, ns = 0, nperf = 0;

    static LoopStacks analysis(const Interconnection& sigma_rho);
    static LoopStacks estimation(const Interconnection& xi_rho);
};

AffineMat scalar_times(const AffineScalar& s, const MatrixXd& m);

// diag(X, 0) padding of a filter-state block to the full loop state
AffineMat pad_state_block(const AffineMat& x, int nstate);

// (I 0)^T P (I 0) + (A..)^T P (A..) + (Cs..)^T M (Cs..) - mu (0 0 I)^T (0 0 I),
// with the first term negated: the exponential-stability dissipation LMI.
AffineMat stability_lmi(const LoopStacks& st, const AffineMat& p, const AffineMat& m,
                        const AffineScalar& mu);

// (I..)^T(X1p - P)(I..) + (A..)^T X2p (A..) + (Cs..)^T M2 (Cs..)
//   + w_perf * (Cz..)^T (Cz..) - beta (0 0 I)^T(0 0 I): the peak-bound LMI.
// For the estimator loop the w_perf block generalizes to a matrix weight.
AffineMat performance_lmi(const LoopStacks& st, const AffineMat& p, const AffineMat& x1_pad,
                          const AffineMat& x2_pad, const AffineMat& m2,
                          const AffineMat& perf_weight, const AffineScalar& beta);

// P - diag(X1,0) - diag(X2,0), required positive definite.
AffineMat coupling_lmi(const AffineMat& p, const AffineMat& x1_pad, const AffineMat& x2_pad);

// Multiplier combination sum_i c_i * basis_i as affine expressions over
// program variables c_i >= 0.
struct MultiplierVars {
    std::vector<int> coeffs;
    AffineMat m;  // ns x ns
    AffineMat x;  // npsi x npsi
    AffineScalar coeff_sum;
};
MultiplierVars add_multiplier(ConicProgram& prog, const MultiplierClass& cls);

}  // namespace flextube
