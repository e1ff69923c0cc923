#include "numerics/dense.hpp"

#include <Eigen/Eigenvalues>

namespace flextube {

void require(bool cond, const std::string& what) {
    if (!cond) throw DimensionError(what);
}

SymMatrix::SymMatrix(const MatrixXd& m) {
    require(m.rows() == m.cols(), "SymMatrix: matrix not square");
    if (m.size() > 0) {
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if (asym > 1e-12 * scale)
            throw std::runtime_error("SymMatrix: asymmetry " + std::to_string(asym) +
                                     " exceeds tolerance");
    }
    m_ = 0.5 * (m + m.transpose());
}

double spectral_radius(const MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<MatrixXd> es(a, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double psd_margin(const SymMatrix& e) {
    if (e.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(e.mat(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const SymMatrix& e) {
    if (e.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(e.mat(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double two_to_inf_norm(const MatrixXd& a) {
    require(a.rows() > 0 && a.cols() > 0, "two_to_inf_norm: empty matrix");
    return a.rowwise().norm().maxCoeff();
}

double operator_norm(const MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    return a.jacobiSvd().singularValues()(0);
}

SymMatrix solve_discrete_lyapunov(const MatrixXd& a, const SymMatrix& q) {
    require(a.rows() == a.cols(), "lyapunov: A not square");
    require(a.rows() == q.dim(), "lyapunov: dimension mismatch");
    const int n = static_cast<int>(a.rows());
    if (n == 0) return SymMatrix();
    if (spectral_radius(a) >= 1.0 - 1e-9)
        throw NotSchurStable("lyapunov: spectral radius >= 1 - 1e-9");

    // vec(A^T S A) = (A^T (x) A^T) vec(S); problem sizes stay small, so the
    // Kronecker linear system is solved densely.
    MatrixXd at = a.transpose();
    MatrixXd kron(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            kron.block(i * n, j * n, n, n) = at(i, j) * at;
    MatrixXd lhs = kron - MatrixXd::Identity(n * n, n * n);
    VectorXd rhs(n * n);
    for (int j = 0; j < n; ++j) rhs.segment(j * n, n) = -q.mat().col(j);
    VectorXd s = lhs.fullPivLu().solve(rhs);
    MatrixXd sm(n, n);
    for (int j = 0; j < n; ++j) sm.col(j) = s.segment(j * n, n);
    return SymMatrix(0.5 * (sm + sm.transpose()));
}

double max_quad_over_ellipsoid(const SymMatrix& w, const MatrixXd& e) {
    const int n = w.dim();
    require(e.rows() == n && e.cols() == n, "ellipsoid: dimension mismatch");
    if (n == 0) return 0.0;
    // max v^T W v s.t. ||E v|| <= 1 equals lambda_max(E^{-T} W E^{-1}),
    // clamped at zero because v = 0 is always admissible.
    MatrixXd einv = e.fullPivLu().inverse();
    SymMatrix g(einv.transpose() * w.mat() * einv);
    return std::max(0.0, psd_margin(g));
}

}  // namespace flextube
