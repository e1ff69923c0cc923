#include "analysis/dare.hpp"

namespace flextube {

SymMatrix solve_dare(const MatrixXd& a, const MatrixXd& b, const SymMatrix& q, const SymMatrix& r) {
    const int n = static_cast<int>(a.rows());
    require(a.cols() == n && b.rows() == n, "dare: dims");
    require(q.dim() == n && r.dim() == static_cast<int>(b.cols()), "dare: weight dims");
    MatrixXd rinv = r.mat().llt().solve(MatrixXd::Identity(r.dim(), r.dim()));
    MatrixXd ak = a;
    MatrixXd gk = b * rinv * b.transpose();
    MatrixXd hk = q.mat();
    for (int it = 0; it < 120; ++it) {
        MatrixXd w = MatrixXd::Identity(n, n) + gk * hk;
        Eigen::PartialPivLU<MatrixXd> lu(w);
        MatrixXd w_a = lu.solve(ak);
        MatrixXd w_g = lu.solve(gk);
        MatrixXd h_next = hk + ak.transpose() * hk * w_a;
        MatrixXd g_next = gk + ak * w_g * ak.transpose();
        MatrixXd a_next = ak * w_a;
        double delta = (h_next - hk).norm();
        ak = a_next;
        gk = 0.5 * (g_next + g_next.transpose());
        hk = 0.5 * (h_next + h_next.transpose());
        if (delta <= 1e-14 * std::max(1.0, hk.norm())) break;
    }
    return SymMatrix(hk);
}

MatrixXd dlqr_gain(const MatrixXd& a, const MatrixXd& b, const SymMatrix& q, const SymMatrix& r,
                   const MatrixXd& n) {
    MatrixXd rinv = r.mat().llt().solve(MatrixXd::Identity(r.dim(), r.dim()));
    MatrixXd a_t = a - b * rinv * n.transpose();
    MatrixXd q_t = q.mat() - n * rinv * n.transpose();
    SymMatrix x = solve_dare(a_t, b, SymMatrix(0.5 * (q_t + q_t.transpose())), r);
    MatrixXd gram = r.mat() + b.transpose() * x.mat() * b;
    return -gram.llt().solve(b.transpose() * x.mat() * a + n.transpose());
}

}  // namespace flextube
