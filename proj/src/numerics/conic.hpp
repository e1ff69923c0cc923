#pragma once

#include <string>
#include <utility>
#include <vector>

#include "numerics/dense.hpp"
#include "numerics/ipm.hpp"

namespace flextube {

struct Infeasible : std::runtime_error {
    explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

class ConicProgram;

// Affine matrix expression: C0 + sum_i x_i * Ci, with the variable list kept
// sorted by id. All synthesis LMIs are assembled from these.
class AffineMat {
public:
    AffineMat() = default;
    AffineMat(int rows, int cols);
    static AffineMat constant(const MatrixXd& m);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const MatrixXd& c0() const { return c0_; }
    const std::vector<std::pair<int, MatrixXd>>& terms() const { return terms_; }

    AffineMat& add_term(int var, const MatrixXd& coeff);
    AffineMat& add_constant(const MatrixXd& m);

    AffineMat operator+(const AffineMat& o) const;
    AffineMat operator-(const AffineMat& o) const;
    AffineMat operator*(double a) const;
    AffineMat transpose() const;
    AffineMat left_mul(const MatrixXd& t) const;   // t * X
    AffineMat right_mul(const MatrixXd& t) const;  // X * t
    AffineMat congruence(const MatrixXd& t) const; // t^T X t
    // place this expression as a block of a larger zero expression
    AffineMat embed(int big_rows, int big_cols, int at_row, int at_col) const;

    MatrixXd eval(const std::vector<double>& xvals) const;

private:
    int rows_ = 0, cols_ = 0;
    MatrixXd c0_;
    std::vector<std::pair<int, MatrixXd>> terms_;
};

// [A B; C D]-style assembly of affine blocks.
AffineMat hvcat(const std::vector<std::vector<AffineMat>>& blocks);

class AffineScalar {
public:
    AffineScalar() = default;
    AffineScalar(double c) : c0_(c) {}  // NOLINT(google-explicit-constructor)
    double c0() const { return c0_; }
    const std::vector<std::pair<int, double>>& terms() const { return terms_; }
    AffineScalar& add_term(int var, double coeff);
    AffineScalar operator+(const AffineScalar& o) const;
    AffineScalar operator-(const AffineScalar& o) const;
    AffineScalar operator*(double a) const;
    double eval(const std::vector<double>& xvals) const;

private:
    double c0_ = 0.0;
    std::vector<std::pair<int, double>> terms_;
};

struct MatVar {
    int n = 0;                 // symmetric n x n
    std::vector<int> ids;      // lower-triangle scalar ids, column major
    int id_at(int i, int j) const;
};

struct RectVar {
    int rows = 0, cols = 0;
    std::vector<int> ids;      // column major
    int id_at(int i, int j) const { return ids[static_cast<size_t>(j) * rows + i]; }
};

enum class ProgStatus { Optimal, Infeasible, Unbounded, NumericalTrouble };

struct ConicSolution {
    ProgStatus status = ProgStatus::NumericalTrouble;
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
    double gap = 0.0;
    std::string message;

    double value(int var) const { return x[static_cast<size_t>(var)]; }
    double value(const AffineScalar& e) const { return e.eval(x); }
    MatrixXd value(const AffineMat& e) const { return e.eval(x); }
    MatrixXd value(const MatVar& v) const;
    MatrixXd value(const RectVar& v) const;
};

class ConicProgram {
public:
    int scalar();
    int scalar_nonneg();  // scalar with x >= 0 attached
    MatVar sym(int n);
    RectVar rect(int rows, int cols);

    AffineMat expr(const MatVar& v) const;
    AffineMat expr(const RectVar& v) const;
    AffineScalar expr(int var) const { return AffineScalar(0.0).add_term(var, 1.0); }

    // F(x) <= -eps*I  (strict LMIs are posed with a configurable margin)
    void constrain_neg_semidef(const AffineMat& f, double eps = 0.0);
    // F(x) >= eps*I
    void constrain_pos_semidef(const AffineMat& f, double eps = 0.0);
    // ||u(x)||_2 <= t(x)
    void constrain_soc(const std::vector<AffineScalar>& u, const AffineScalar& t);
    // a(x) >= 0
    void constrain_nonneg(const AffineScalar& a);

    void minimize(const AffineScalar& obj) { objective_ = obj; }

    int num_vars() const { return nvars_; }
    int num_lmis() const { return static_cast<int>(lmis_.size()); }

    // margins of all semidefinite constraints at a given point, as
    // psd_margin(F(x)) for the <=0-oriented expression
    std::vector<double> lmi_margins(const std::vector<double>& xvals) const;

    ConicSolution try_solve(const ipm::Options& opts = {}) const;
    // throwing variant per the module contract
    ConicSolution solve(const ipm::Options& opts = {}) const;

private:
    int nvars_ = 0;
    AffineScalar objective_;
    std::vector<AffineScalar> nonneg_;
    std::vector<std::pair<std::vector<AffineScalar>, AffineScalar>> socs_;
    std::vector<AffineMat> lmis_;  // constraints F <= 0 after margin folding
};

}  // namespace flextube
