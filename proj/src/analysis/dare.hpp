#pragma once

#include "numerics/dense.hpp"

namespace flextube {

// Stabilizing solution of A^T X A - X - A^T X B (R + B^T X B)^{-1} B^T X A + Q = 0
// via the structure-preserving doubling iteration.
SymMatrix solve_dare(const MatrixXd& a, const MatrixXd& b, const SymMatrix& q, const SymMatrix& r);

// LQR gain for stage cost x'Qx + 2x'Nu + u'Ru; returns F with u = F x.
MatrixXd dlqr_gain(const MatrixXd& a, const MatrixXd& b, const SymMatrix& q, const SymMatrix& r,
                   const MatrixXd& n);

}  // namespace flextube
