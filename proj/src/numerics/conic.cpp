#include "numerics/conic.hpp"

#include <algorithm>

namespace flextube {

AffineMat::AffineMat(int rows, int cols) : rows_(rows), cols_(cols) {
    c0_ = MatrixXd::Zero(rows, cols);
}

AffineMat AffineMat::constant(const MatrixXd& m) {
    AffineMat e(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    e.c0_ = m;
    return e;
}

AffineMat& AffineMat::add_term(int var, const MatrixXd& coeff) {
    require(coeff.rows() == rows_ && coeff.cols() == cols_, "AffineMat: term shape mismatch");
    auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                               [](const auto& p, int v) { return p.first < v; });
    if (it != terms_.end() && it->first == var)
        it->second += coeff;
    else
        terms_.insert(it, {var, coeff});
    return *this;
}

AffineMat& AffineMat::add_constant(const MatrixXd& m) {
    c0_ += m;
    return *this;
}

AffineMat AffineMat::operator+(const AffineMat& o) const {
    require(rows_ == o.rows_ && cols_ == o.cols_, "AffineMat: shape mismatch in +");
    AffineMat e = *this;
    e.c0_ += o.c0_;
    for (const auto& [v, m] : o.terms_) e.add_term(v, m);
    return e;
}

AffineMat AffineMat::operator-(const AffineMat& o) const { return *this + o * (-1.0); }

AffineMat AffineMat::operator*(double a) const {
    AffineMat e = *this;
    e.c0_ *= a;
    for (auto& [v, m] : e.terms_) m *= a;
    return e;
}

AffineMat AffineMat::transpose() const {
    AffineMat e(cols_, rows_);
    e.c0_ = c0_.transpose();
    e.terms_ = terms_;
    for (auto& [v, m] : e.terms_) m = m.transpose().eval();
    return e;
}

AffineMat AffineMat::left_mul(const MatrixXd& t) const {
    require(t.cols() == rows_, "AffineMat: left_mul shape");
    AffineMat e(static_cast<int>(t.rows()), cols_);
    e.c0_ = t * c0_;
    e.terms_ = terms_;
    for (auto& [v, m] : e.terms_) m = (t * m).eval();
    return e;
}

AffineMat AffineMat::right_mul(const MatrixXd& t) const {
    require(cols_ == t.rows(), "AffineMat: right_mul shape");
    AffineMat e(rows_, static_cast<int>(t.cols()));
    e.c0_ = c0_ * t;
    e.terms_ = terms_;
    for (auto& [v, m] : e.terms_) m = (m * t).eval();
    return e;
}

AffineMat AffineMat::congruence(const MatrixXd& t) const {
    return left_mul(t.transpose()).right_mul(t);
}

AffineMat AffineMat::embed(int big_rows, int big_cols, int at_row, int at_col) const {
    AffineMat e(big_rows, big_cols);
    e.c0_.block(at_row, at_col, rows_, cols_) = c0_;
    for (const auto& [v, m] : terms_) {
        MatrixXd big = MatrixXd::Zero(big_rows, big_cols);
        big.block(at_row, at_col, rows_, cols_) = m;
        e.add_term(v, big);
    }
    return e;
}

MatrixXd AffineMat::eval(const std::vector<double>& xvals) const {
    MatrixXd m = c0_;
    for (const auto& [v, coeff] : terms_) m += xvals[static_cast<size_t>(v)] * coeff;
    return m;
}

AffineMat hvcat(const std::vector<std::vector<AffineMat>>& blocks) {
    int total_rows = 0, total_cols = 0;
    for (const auto& row : blocks) total_rows += row.front().rows();
    for (const auto& b : blocks.front()) total_cols += b.cols();
    AffineMat e(total_rows, total_cols);
    int r = 0;
    for (const auto& row : blocks) {
        int c = 0;
        for (const auto& b : row) {
            e = e + b.embed(total_rows, total_cols, r, c);
            c += b.cols();
        }
        r += row.front().rows();
    }
    return e;
}

AffineScalar& AffineScalar::add_term(int var, double coeff) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                               [](const auto& p, int v) { return p.first < v; });
    if (it != terms_.end() && it->first == var)
        it->second += coeff;
    else
        terms_.insert(it, {var, coeff});
    return *this;
}

AffineScalar AffineScalar::operator+(const AffineScalar& o) const {
    AffineScalar e = *this;
    e.c0_ += o.c0_;
    for (const auto& [v, c] : o.terms_) e.add_term(v, c);
    return e;
}

AffineScalar AffineScalar::operator-(const AffineScalar& o) const { return *this + o * (-1.0); }

AffineScalar AffineScalar::operator*(double a) const {
    AffineScalar e = *this;
    e.c0_ *= a;
    for (auto& [v, c] : e.terms_) c *= a;
    return e;
}

double AffineScalar::eval(const std::vector<double>& xvals) const {
    double r = c0_;
    for (const auto& [v, c] : terms_) r += xvals[static_cast<size_t>(v)] * c;
    return r;
}

int MatVar::id_at(int i, int j) const {
    if (i < j) std::swap(i, j);
    // column-major lower triangle offset
    int off = 0;
    for (int col = 0; col < j; ++col) off += n - col;
    return ids[static_cast<size_t>(off + (i - j))];
}

MatrixXd ConicSolution::value(const MatVar& v) const {
    MatrixXd m(v.n, v.n);
    for (int j = 0; j < v.n; ++j)
        for (int i = j; i < v.n; ++i) m(i, j) = m(j, i) = x[static_cast<size_t>(v.id_at(i, j))];
    return m;
}

MatrixXd ConicSolution::value(const RectVar& v) const {
    MatrixXd m(v.rows, v.cols);
    for (int j = 0; j < v.cols; ++j)
        for (int i = 0; i < v.rows; ++i) m(i, j) = x[static_cast<size_t>(v.id_at(i, j))];
    return m;
}

int ConicProgram::scalar() { return nvars_++; }

int ConicProgram::scalar_nonneg() {
    int v = scalar();
    constrain_nonneg(expr(v));
    return v;
}

MatVar ConicProgram::sym(int n) {
    MatVar v;
    v.n = n;
    v.ids.reserve(static_cast<size_t>(n) * (n + 1) / 2);
    for (int i = 0; i < n * (n + 1) / 2; ++i) v.ids.push_back(scalar());
    return v;
}

RectVar ConicProgram::rect(int rows, int cols) {
    RectVar v;
    v.rows = rows;
    v.cols = cols;
    v.ids.reserve(static_cast<size_t>(rows) * cols);
    for (int i = 0; i < rows * cols; ++i) v.ids.push_back(scalar());
    return v;
}

AffineMat ConicProgram::expr(const MatVar& v) const {
    AffineMat e(v.n, v.n);
    for (int j = 0; j < v.n; ++j)
        for (int i = j; i < v.n; ++i) {
            MatrixXd basis = MatrixXd::Zero(v.n, v.n);
            basis(i, j) = 1.0;
            basis(j, i) = 1.0;
            e.add_term(v.id_at(i, j), basis);
        }
    return e;
}

AffineMat ConicProgram::expr(const RectVar& v) const {
    AffineMat e(v.rows, v.cols);
    for (int j = 0; j < v.cols; ++j)
        for (int i = 0; i < v.rows; ++i) {
            MatrixXd basis = MatrixXd::Zero(v.rows, v.cols);
            basis(i, j) = 1.0;
            e.add_term(v.id_at(i, j), basis);
        }
    return e;
}

void ConicProgram::constrain_neg_semidef(const AffineMat& f, double eps) {
    require(f.rows() == f.cols(), "LMI expression not square");
    if (f.rows() == 0) return;
    AffineMat shifted = f;
    shifted.add_constant(eps * MatrixXd::Identity(f.rows(), f.rows()));
    lmis_.push_back(shifted);
}

void ConicProgram::constrain_pos_semidef(const AffineMat& f, double eps) {
    constrain_neg_semidef(f * (-1.0), eps);
}

void ConicProgram::constrain_soc(const std::vector<AffineScalar>& u, const AffineScalar& t) {
    socs_.push_back({u, t});
}

void ConicProgram::constrain_nonneg(const AffineScalar& a) { nonneg_.push_back(a); }

std::vector<double> ConicProgram::lmi_margins(const std::vector<double>& xvals) const {
    std::vector<double> margins;
    margins.reserve(lmis_.size());
    for (const auto& f : lmis_) margins.push_back(psd_margin(SymMatrix(f.eval(xvals))));
    return margins;
}

ConicSolution ConicProgram::try_solve(const ipm::Options& opts) const {
    using ipm::ConeBlock;
    using ipm::ConeKind;
    const int n = nvars_;
    int m = static_cast<int>(nonneg_.size());
    std::vector<ConeBlock> cones;
    if (!nonneg_.empty()) cones.push_back({ConeKind::NonNeg, static_cast<int>(nonneg_.size())});
    for (const auto& [u, t] : socs_) {
        cones.push_back({ConeKind::Soc, static_cast<int>(u.size()) + 1});
        m += static_cast<int>(u.size()) + 1;
    }
    for (const auto& f : lmis_) {
        cones.push_back({ConeKind::Psd, f.rows()});
        m += ipm::svec_len(f.rows());
    }

    VectorXd c = VectorXd::Zero(n);
    for (const auto& [v, coeff] : objective_.terms()) c(v) += coeff;

    MatrixXd g = MatrixXd::Zero(m, n);
    VectorXd h = VectorXd::Zero(m);
    int row = 0;
    for (const auto& a : nonneg_) {  // s = a(x) >= 0  ->  -coef*x + s = c0
        h(row) = a.c0();
        for (const auto& [v, coeff] : a.terms()) g(row, v) = -coeff;
        ++row;
    }
    for (const auto& [u, t] : socs_) {  // s = [t(x); u(x)] in SOC
        h(row) = t.c0();
        for (const auto& [v, coeff] : t.terms()) g(row, v) = -coeff;
        ++row;
        for (const auto& a : u) {
            h(row) = a.c0();
            for (const auto& [v, coeff] : a.terms()) g(row, v) = -coeff;
            ++row;
        }
    }
    for (const auto& f : lmis_) {  // s = svec(-F(x)) in PSD
        const int len = ipm::svec_len(f.rows());
        h.segment(row, len) = ipm::svec(-f.c0());
        for (const auto& [v, coeff] : f.terms()) g.block(row, v, len, 1) = ipm::svec(coeff);
        row += len;
    }

    ipm::Result r = ipm::solve(c, g, h, cones, opts);
    ConicSolution sol;
    sol.iterations = r.iterations;
    sol.gap = r.gap;
    sol.message = r.message;
    switch (r.status) {
        case ipm::SolveStatus::Optimal:
            sol.status = ProgStatus::Optimal;
            sol.x.assign(r.x.data(), r.x.data() + n);
            sol.objective = r.obj + objective_.c0();
            break;
        case ipm::SolveStatus::PrimalInfeasible:
            sol.status = ProgStatus::Infeasible;
            break;
        case ipm::SolveStatus::DualInfeasible:
            sol.status = ProgStatus::Unbounded;
            break;
        default:
            sol.status = ProgStatus::NumericalTrouble;
            if (r.x.size() == n) sol.x.assign(r.x.data(), r.x.data() + n);
            break;
    }
    return sol;
}

ConicSolution ConicProgram::solve(const ipm::Options& opts) const {
    ConicSolution sol = try_solve(opts);
    if (sol.status == ProgStatus::Infeasible) throw Infeasible("conic program infeasible: " + sol.message);
    if (sol.status != ProgStatus::Optimal)
        throw NumericalFailure("conic solve failed: " + sol.message);
    return sol;
}

}  // namespace flextube
