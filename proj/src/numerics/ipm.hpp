#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace flextube::ipm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cone program in standard form:
//   minimize    c^T x
//   subject to  G x + s = h,   s in K
// where K is a product of nonnegative, second-order, and PSD cones.
// PSD blocks use scaled vectorization (svec) so that <X,Y>_F = svec(X)^T svec(Y).

enum class ConeKind { NonNeg, Soc, Psd };

struct ConeBlock {
    ConeKind kind;
    int size;  // NonNeg: count; Soc: cone dim; Psd: matrix order p (svec len p(p+1)/2)
    int vlen() const { return kind == ConeKind::Psd ? size * (size + 1) / 2 : size; }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, IterationLimit, NumericalFailure };

struct Options {
    double feastol = 1e-8;
    double abstol = 1e-9;
    double reltol = 1e-9;
    int max_iter = 200;
    double step_frac = 0.99;
    bool verbose = false;
};

struct Result {
    SolveStatus status = SolveStatus::NumericalFailure;
    VectorXd x;       // primal solution (scaled by 1/tau)
    VectorXd s;       // primal slack
    VectorXd z;       // dual
    double obj = 0.0;
    int iterations = 0;
    double gap = 0.0;
    double pres = 0.0;
    double dres = 0.0;
    std::string message;
};

int svec_len(int p);
VectorXd svec(const MatrixXd& x);
MatrixXd smat(const VectorXd& v, int p);

Result solve(const VectorXd& c, const MatrixXd& g, const VectorXd& h,
             const std::vector<ConeBlock>& cones, const Options& opts = {});

}  // namespace flextube::ipm
