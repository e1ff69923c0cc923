#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace flextube {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct NotSchurStable : std::runtime_error {
    explicit NotSchurStable(const std::string& what) : std::runtime_error(what) {}
};

// Symmetric matrix wrapper. Construction rejects matrices whose asymmetry
// exceeds 1e-12 (relative to the largest entry) and symmetrizes the rest.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const MatrixXd& m);
    static SymMatrix zero(int n) { return SymMatrix(MatrixXd::Zero(n, n)); }
    static SymMatrix identity(int n) { return SymMatrix(MatrixXd::Identity(n, n)); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const MatrixXd& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    SymMatrix block(int i, int n) const { return SymMatrix(m_.block(i, i, n, n)); }

private:
    MatrixXd m_;
};

void require(bool cond, const std::string& what);

// Spectral radius of a (not necessarily symmetric) square matrix.
double spectral_radius(const MatrixXd& a);

// Largest eigenvalue of a symmetric matrix; callers verifying strict LMIs
// assert the result <= -tolerance.
double psd_margin(const SymMatrix& e);
double min_eigenvalue(const SymMatrix& e);

// max_i ||e_i^T A||_2, which equals max_{||x||_2 = 1} ||A x||_inf.
double two_to_inf_norm(const MatrixXd& a);

// Largest singular value.
double operator_norm(const MatrixXd& a);

// Unique S with A^T S A - S + Q = 0 for Schur-stable A and Q >= 0.
SymMatrix solve_discrete_lyapunov(const MatrixXd& a, const SymMatrix& q);

// max over {v : ||E v|| <= 1} of v^T W v, for symmetric W >= 0 and square
// invertible E (a generalized eigenvalue computation).
double max_quad_over_ellipsoid(const SymMatrix& w, const MatrixXd& e);

}  // namespace flextube
