#include "iqc/iqc.hpp"

#include "numerics/conic.hpp"

namespace flextube {

MultiplierClass::MultiplierClass(Filter filter, std::vector<MultiplierPair> basis, double bound,
                                 int nq, int np)
    : filter_(std::move(filter)), basis_(std::move(basis)), bound_(bound), nq_(nq), np_(np) {
    for (const auto& p : basis_) {
        require(p.m.dim() == filter_.ns(), "multiplier class: M dim mismatch");
        require(p.x.dim() == filter_.npsi(), "multiplier class: X dim mismatch");
    }
}

MultiplierPair MultiplierClass::combine(const VectorXd& coeffs) const {
    require(coeffs.size() == size(), "multiplier class: coefficient count");
    for (int i = 0; i < coeffs.size(); ++i)
        require(coeffs(i) >= -1e-12, "multiplier class: coefficients must be nonnegative");
    MatrixXd m = MatrixXd::Zero(filter_.ns(), filter_.ns());
    MatrixXd x = MatrixXd::Zero(filter_.npsi(), filter_.npsi());
    for (int i = 0; i < coeffs.size(); ++i) {
        m += coeffs(i) * basis_[static_cast<size_t>(i)].m.mat();
        x += coeffs(i) * basis_[static_cast<size_t>(i)].x.mat();
    }
    return {SymMatrix(m), SymMatrix(x)};
}

MultiplierClass norm_bounded_class(double b, int filter_order, int nq, int np, double pole) {
    require(b > 0.0, "norm_bounded_class: bound must be positive");
    require(filter_order >= 0, "norm_bounded_class: negative order");
    require(pole > 0.0 && pole < 1.0, "norm_bounded_class: pole outside (0,1)");
    const int f = filter_order;
    const int npsi = f * (nq + np);
    const int nblk = f + 1;
    const int ns = nblk * (nq + np);

    Filter filt;
    filt.a = MatrixXd::Zero(npsi, npsi);
    filt.b_q = MatrixXd::Zero(npsi, nq);
    filt.b_p = MatrixXd::Zero(npsi, np);
    filt.c = MatrixXd::Zero(ns, npsi);
    filt.d_q = MatrixXd::Zero(ns, nq);
    filt.d_p = MatrixXd::Zero(ns, np);

    // chain of first-order sections x_j+ = a x_j + (1-a) x_{j-1}, x_0 = input
    auto chain = [&](int state_base, int chan, MatrixXd& b_in, int out_base) {
        for (int j = 0; j < f; ++j) {
            int row = state_base + j * chan;
            filt.a.block(row, row, chan, chan) = pole * MatrixXd::Identity(chan, chan);
            if (j == 0)
                b_in.block(row, 0, chan, chan) = (1.0 - pole) * MatrixXd::Identity(chan, chan);
            else
                filt.a.block(row, row - chan, chan, chan) =
                    (1.0 - pole) * MatrixXd::Identity(chan, chan);
            filt.c.block(out_base + (j + 1) * chan, row, chan, chan) =
                MatrixXd::Identity(chan, chan);
        }
    };
    filt.d_q.topRows(nq).setIdentity();
    chain(0, nq, filt.b_q, 0);
    filt.d_p.block(nblk * nq, 0, np, np).setIdentity();
    chain(f * nq, np, filt.b_p, nblk * nq);

    std::vector<MultiplierPair> basis;
    for (int j = 0; j < nblk; ++j) {
        MatrixXd m = MatrixXd::Zero(ns, ns);
        m.block(j * nq, j * nq, nq, nq) = b * b * MatrixXd::Identity(nq, nq);
        int prow = nblk * nq + j * np;
        m.block(prow, prow, np, np) = -MatrixXd::Identity(np, np);
        basis.push_back({SymMatrix(m), SymMatrix::zero(npsi)});
    }
    return MultiplierClass(std::move(filt), std::move(basis), b, nq, np);
}

bool bounded_real_feasible(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c,
                           const MatrixXd& d, double gain) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(b.cols());
    if (n == 0) return operator_norm(d) < gain;
    ConicProgram prog;
    MatVar yv = prog.sym(n);
    int t = prog.scalar();
    AffineMat y = prog.expr(yv);

    MatrixXd ta(n, n + m), t1(n, n + m), to(static_cast<int>(c.rows()), n + m), tw(m, n + m);
    ta << a, b;
    t1 << MatrixXd::Identity(n, n), MatrixXd::Zero(n, m);
    to << c, d;
    tw << MatrixXd::Zero(m, n), MatrixXd::Identity(m, m);

    AffineMat f = y.congruence(ta) - y.congruence(t1) +
                  AffineMat::constant(to.transpose() * to - gain * gain * tw.transpose() * tw);
    AffineMat ti(n + m, n + m);
    ti.add_term(t, MatrixXd::Identity(n + m, n + m));
    AffineMat tin(n, n);
    tin.add_term(t, MatrixXd::Identity(n, n));
    prog.constrain_neg_semidef(f - ti);
    prog.constrain_neg_semidef(y * (-1.0) - tin);  // Y >= -t I (positive when t < 0)
    AffineScalar reg(0.0);
    for (int i = 0; i < n; ++i) reg = reg + prog.expr(yv.id_at(i, i));
    prog.constrain_nonneg(prog.expr(t) + AffineScalar(1.0));
    prog.minimize(prog.expr(t) + reg * 1e-9);
    auto sol = prog.try_solve();
    if (sol.status != ProgStatus::Optimal) return false;
    return sol.value(t) < -1e-9;
}

double lti_gain_upper(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c, const MatrixXd& d,
                      double tol) {
    if (a.rows() > 0 && spectral_radius(a) >= 1.0) return std::numeric_limits<double>::infinity();
    double lo = std::max(1e-12, operator_norm(d) * 0.999);
    double hi = std::max(1.0, 2.0 * lo);
    while (!bounded_real_feasible(a, b, c, d, hi)) {
        hi *= 4.0;
        if (hi > 1e12) return std::numeric_limits<double>::infinity();
    }
    while (hi - lo > tol * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        if (bounded_real_feasible(a, b, c, d, mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

UncertaintyRealization UncertaintyRealization::zero(int np, int nq) {
    UncertaintyRealization u;
    u.kind_ = Kind::Zero;
    u.np_ = np;
    u.nq_ = nq;
    u.a_ = MatrixXd::Zero(0, 0);
    u.b_ = MatrixXd::Zero(0, nq);
    u.c_ = MatrixXd::Zero(np, 0);
    u.d_ = MatrixXd::Zero(np, nq);
    return u;
}

UncertaintyRealization UncertaintyRealization::static_gain(const MatrixXd& g, double bound) {
    UncertaintyRealization u;
    u.kind_ = Kind::StaticGain;
    u.np_ = static_cast<int>(g.rows());
    u.nq_ = static_cast<int>(g.cols());
    u.bound_ = bound;
    require(operator_norm(g) <= bound * (1.0 + 1e-12),
            "static uncertainty exceeds the declared class bound");
    u.a_ = MatrixXd::Zero(0, 0);
    u.b_ = MatrixXd::Zero(0, u.nq_);
    u.c_ = MatrixXd::Zero(u.np_, 0);
    u.d_ = g;
    return u;
}

UncertaintyRealization UncertaintyRealization::lti(const MatrixXd& a, const MatrixXd& b,
                                                   const MatrixXd& c, const MatrixXd& d,
                                                   double bound, double rho_min, int samples) {
    UncertaintyRealization u;
    u.kind_ = Kind::Lti;
    u.np_ = static_cast<int>(c.rows());
    u.nq_ = static_cast<int>(b.cols());
    u.bound_ = bound;
    u.a_ = a;
    u.b_ = b;
    u.c_ = c;
    u.d_ = d;
    require(spectral_radius(a) < rho_min, "lti uncertainty: poles must lie inside rho_min");
    for (int i = 0; i < samples; ++i) {
        double rho = rho_min + (1.0 - rho_min) * i / (samples - 1.0);
        if (!bounded_real_feasible(a / rho, b / rho, c, d, bound * (1.0 + 1e-9)))
            throw std::runtime_error("lti uncertainty: loop-transformed gain exceeds bound at rho=" +
                                     std::to_string(rho));
    }
    return u;
}

UncertaintyRealization::Op::Op(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    state_ = VectorXd::Zero(a_.rows());
}

VectorXd UncertaintyRealization::Op::step(const VectorXd& q) {
    VectorXd out = c_ * state_ + d_ * q;
    state_ = a_ * state_ + b_ * q;
    return out;
}

UncertaintyRealization::Op UncertaintyRealization::loop_transformed(double rho) const {
    require(rho > 0.0 && rho <= 1.0, "loop_transform: rho outside (0,1]");
    if (kind_ == Kind::Lti) return Op(a_ / rho, b_ / rho, c_, d_);
    return Op(a_, b_, c_, d_);  // statics commute with the loop transformation
}

MatrixXd UncertaintyRealization::peak_gain_input(double rho, int horizon, std::mt19937_64& rng,
                                                 int iters) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd v(nq_, horizon);
    for (int t = 0; t < horizon; ++t)
        for (int i = 0; i < nq_; ++i) v(i, t) = gauss(rng);
    v /= std::max(1e-300, v.norm());

    const MatrixXd a = kind_ == Kind::Lti ? (a_ / rho).eval() : a_;
    const MatrixXd b = kind_ == Kind::Lti ? (b_ / rho).eval() : b_;
    for (int it = 0; it < iters; ++it) {
        // forward pass
        MatrixXd y(np_, horizon);
        VectorXd x = VectorXd::Zero(a.rows());
        for (int t = 0; t < horizon; ++t) {
            y.col(t) = c_ * x + d_ * v.col(t);
            x = a * x + b * v.col(t);
        }
        // adjoint pass (time-reversed)
        MatrixXd w(nq_, horizon);
        VectorXd mu = VectorXd::Zero(a.rows());
        for (int t = horizon - 1; t >= 0; --t) {
            w.col(t) = d_.transpose() * y.col(t) + b.transpose() * mu;
            mu = a.transpose() * mu + c_.transpose() * y.col(t);
        }
        double n = w.norm();
        if (n < 1e-300) break;
        v = w / n;
    }
    return v;
}

UncertaintyRealization random_certified_lti(int np, int nq, int nstates, double target_gain,
                                            double bound, double rho_min, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randm = [&](int r, int c) {
        MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };
    MatrixXd a = randm(nstates, nstates);
    a *= 0.9 * rho_min / std::max(1e-12, spectral_radius(a));
    MatrixXd b = randm(nstates, nq), c = randm(np, nstates), d = 0.3 * randm(np, nq);
    double worst = 0.0;
    for (int i = 0; i < 12; ++i) {
        double rho = rho_min + (1.0 - rho_min) * i / 11.0;
        worst = std::max(worst, lti_gain_upper(a / rho, b / rho, c, d));
    }
    const double scale = target_gain / worst * (1.0 - 1e-9);
    return UncertaintyRealization::lti(a, b, scale * c, scale * d, bound, rho_min);
}

HardIqcReport validate_hard_iqc(const MultiplierClass& cls, const MultiplierPair& pair,
                                const UncertaintyRealization& delta, double rho, int horizon,
                                int trials, uint64_t seed, double tol, bool throw_on_violation) {
    require(pair.m.dim() == cls.filter().ns(), "validate_hard_iqc: pair M dim");
    require(pair.x.dim() == cls.filter().npsi(), "validate_hard_iqc: pair X dim");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Filter& f = cls.filter();
    const int nq = cls.nq();
    const int adversarial = std::min(10, trials);

    HardIqcReport report;
    report.trials = trials;
    report.horizon = horizon;
    report.min_accumulated = std::numeric_limits<double>::infinity();

    for (int trial = 0; trial < trials; ++trial) {
        MatrixXd qbar(nq, horizon);
        if (trial >= trials - adversarial && delta.kind() == UncertaintyRealization::Kind::Lti) {
            qbar = delta.peak_gain_input(rho, horizon, rng);
            qbar *= std::sqrt(static_cast<double>(horizon));
        } else {
            for (int t = 0; t < horizon; ++t)
                for (int i = 0; i < nq; ++i) qbar(i, t) = gauss(rng);
        }
        auto op = delta.loop_transformed(rho);
        VectorXd psi = VectorXd::Zero(f.npsi());
        double acc = 0.0;
        for (int t = 0; t <= horizon; ++t) {
            double value = acc + psi.dot(pair.x.mat() * psi);
            report.min_accumulated = std::min(report.min_accumulated, value);
            if (value < -tol) {
                if (throw_on_violation)
                    throw ViolationFound("hard IQC violated at t=" + std::to_string(t) +
                                             " value=" + std::to_string(value),
                                         trial, t, value, qbar);
                report.passed = false;
                return report;
            }
            if (t == horizon) break;
            VectorXd pbar = op.step(qbar.col(t));
            VectorXd s = f.c * psi + f.d_q * qbar.col(t) + f.d_p * pbar;
            acc += s.dot(pair.m.mat() * s);
            psi = f.a * psi + f.b_q * qbar.col(t) + f.b_p * pbar;
        }
    }
    report.passed = true;
    return report;
}

}  // namespace flextube
