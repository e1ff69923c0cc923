#include "numerics/ipm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <cstdio>

namespace flextube::ipm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sqr(double v) { return v * v; }

// Smallest positive root of a*t^2 + b*t + c = 0 (c > 0), +inf if none.
double smallest_positive_root(double a, double b, double c) {
    if (std::abs(a) < 1e-300) {
        if (b >= 0) return kInf;
        return -c / b;
    }
    double disc = b * b - 4 * a * c;
    if (disc < 0) return a > 0 ? kInf : 0.0;
    double sdisc = std::sqrt(disc);
    double q = -0.5 * (b + (b >= 0 ? sdisc : -sdisc));
    double r1 = q / a, r2 = (q == 0.0) ? kInf : c / q;
    if (r1 > r2) std::swap(r1, r2);
    if (r1 > 0) return r1;
    if (r2 > 0) return r2;
    return kInf;
}

}  // namespace

int svec_len(int p) { return p * (p + 1) / 2; }

VectorXd svec(const MatrixXd& x) {
    const int p = static_cast<int>(x.rows());
    VectorXd v(svec_len(p));
    const double rt2 = std::sqrt(2.0);
    int k = 0;
    for (int j = 0; j < p; ++j) {
        v(k++) = x(j, j);
        for (int i = j + 1; i < p; ++i) v(k++) = rt2 * x(i, j);
    }
    return v;
}

MatrixXd smat(const VectorXd& v, int p) {
    MatrixXd x(p, p);
    const double irt2 = 1.0 / std::sqrt(2.0);
    int k = 0;
    for (int j = 0; j < p; ++j) {
        x(j, j) = v(k++);
        for (int i = j + 1; i < p; ++i) {
            x(i, j) = x(j, i) = irt2 * v(k++);
        }
    }
    return x;
}

namespace {

// Per-block Nesterov-Todd scaling state and cone operations.
struct BlockState {
    ConeBlock blk;
    int offset = 0;

    // NonNeg
    VectorXd d;  // s_i / z_i

    // SOC
    MatrixXd w_soc, winv_soc;

    // PSD
    MatrixXd r, rti, grr, gii;  // r, r^{-T}, r r^T, rti rti^T
    MatrixXd chol_s, chol_z;    // lower Cholesky factors of S and Z

    VectorXd lambda;  // scaled point, lambda = W z = W^{-T} s

    int vlen() const { return blk.vlen(); }

    bool compute_scaling(const VectorXd& s, const VectorXd& z) {
        const int n = vlen();
        lambda.resize(n);
        switch (blk.kind) {
            case ConeKind::NonNeg: {
                d.resize(n);
                for (int i = 0; i < n; ++i) {
                    if (s(i) <= 0 || z(i) <= 0) return false;
                    d(i) = s(i) / z(i);
                    lambda(i) = std::sqrt(s(i) * z(i));
                }
                return true;
            }
            case ConeKind::Soc: {
                const double js = sqr(s(0)) - s.tail(n - 1).squaredNorm();
                const double jz = sqr(z(0)) - z.tail(n - 1).squaredNorm();
                if (js <= 0 || jz <= 0 || s(0) <= 0 || z(0) <= 0) return false;
                VectorXd sb = s / std::sqrt(js), zb = z / std::sqrt(jz);
                double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
                VectorXd wb(n);
                wb(0) = (sb(0) + zb(0)) / (2 * gamma);
                wb.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2 * gamma);
                const double eta = std::pow(js / jz, 0.25);
                w_soc.resize(n, n);
                winv_soc.resize(n, n);
                const double w0 = wb(0);
                const VectorXd w1 = wb.tail(n - 1);
                w_soc(0, 0) = w0;
                w_soc.block(0, 1, 1, n - 1) = w1.transpose();
                w_soc.block(1, 0, n - 1, 1) = w1;
                w_soc.block(1, 1, n - 1, n - 1) =
                    MatrixXd::Identity(n - 1, n - 1) + w1 * w1.transpose() / (1.0 + w0);
                winv_soc(0, 0) = w0;
                winv_soc.block(0, 1, 1, n - 1) = -w1.transpose();
                winv_soc.block(1, 0, n - 1, 1) = -w1;
                winv_soc.block(1, 1, n - 1, n - 1) =
                    MatrixXd::Identity(n - 1, n - 1) + w1 * w1.transpose() / (1.0 + w0);
                w_soc *= eta;
                winv_soc /= eta;
                lambda = w_soc * z;
                return true;
            }
            case ConeKind::Psd: {
                const int p = blk.size;
                MatrixXd sm = smat(s, p), zm = smat(z, p);
                Eigen::LLT<MatrixXd> ls(sm), lz(zm);
                if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
                chol_s = ls.matrixL();
                chol_z = lz.matrixL();
                Eigen::JacobiSVD<MatrixXd> svd(chol_z.transpose() * chol_s,
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
                VectorXd sv = svd.singularValues();
                if (sv.minCoeff() <= 0) return false;
                VectorXd isqrt = sv.cwiseSqrt().cwiseInverse();
                r = chol_s * svd.matrixV() * isqrt.asDiagonal();
                rti = chol_z * svd.matrixU() * isqrt.asDiagonal();
                grr = r * r.transpose();
                gii = rti * rti.transpose();
                lambda = svec(sv.asDiagonal());
                return true;
            }
        }
        return false;
    }

    // H^{-1} v with H = W^T W.
    VectorXd apply_hinv(const VectorXd& v) const {
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return v.cwiseQuotient(d);
            case ConeKind::Soc:
                return winv_soc * (winv_soc * v);
            case ConeKind::Psd:
                return svec(gii * smat(v, blk.size) * gii);
        }
        return v;
    }

    VectorXd apply_w(const VectorXd& v) const {  // W v (z-side map into scaled space)
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return v.cwiseProduct(d.cwiseSqrt());
            case ConeKind::Soc:
                return w_soc * v;
            case ConeKind::Psd:
                return svec(r.transpose() * smat(v, blk.size) * r);
        }
        return v;
    }

    VectorXd apply_wt(const VectorXd& v) const {  // W^T v
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return v.cwiseProduct(d.cwiseSqrt());
            case ConeKind::Soc:
                return w_soc * v;
            case ConeKind::Psd:
                return svec(r * smat(v, blk.size) * r.transpose());
        }
        return v;
    }

    VectorXd apply_wti(const VectorXd& v) const {  // W^{-T} v (s-side map into scaled space)
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return v.cwiseQuotient(d.cwiseSqrt());
            case ConeKind::Soc:
                return winv_soc * v;
            case ConeKind::Psd:
                return svec(rti.transpose() * smat(v, blk.size) * rti);
        }
        return v;
    }

    VectorXd identity() const {
        const int n = vlen();
        VectorXd e = VectorXd::Zero(n);
        switch (blk.kind) {
            case ConeKind::NonNeg:
                e.setOnes();
                break;
            case ConeKind::Soc:
                e(0) = 1.0;
                break;
            case ConeKind::Psd:
                e = svec(MatrixXd::Identity(blk.size, blk.size));
                break;
        }
        return e;
    }

    double degree() const { return blk.kind == ConeKind::Soc ? 1.0 : blk.size; }

    VectorXd jordan_prod(const VectorXd& u, const VectorXd& v) const {
        const int n = vlen();
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return u.cwiseProduct(v);
            case ConeKind::Soc: {
                VectorXd w(n);
                w(0) = u.dot(v);
                w.tail(n - 1) = u(0) * v.tail(n - 1) + v(0) * u.tail(n - 1);
                return w;
            }
            case ConeKind::Psd: {
                MatrixXd um = smat(u, blk.size), vm = smat(v, blk.size);
                return svec(0.5 * (um * vm + vm * um));
            }
        }
        return u;
    }

    VectorXd jordan_inv(const VectorXd& u) const {
        const int n = vlen();
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return u.cwiseInverse();
            case ConeKind::Soc: {
                double ju = sqr(u(0)) - u.tail(n - 1).squaredNorm();
                VectorXd w(n);
                w(0) = u(0) / ju;
                w.tail(n - 1) = -u.tail(n - 1) / ju;
                return w;
            }
            case ConeKind::Psd: {
                // lambda is diagonal in the scaled frame; only called on lambda.
                const int p = blk.size;
                MatrixXd um = smat(u, p);
                VectorXd w = VectorXd::Zero(n);
                MatrixXd wi = MatrixXd::Zero(p, p);
                for (int i = 0; i < p; ++i) wi(i, i) = 1.0 / um(i, i);
                return svec(wi);
            }
        }
        return u;
    }

    // Solve lambda o w = v for w, with lambda the current scaled point.
    VectorXd jordan_div_lambda(const VectorXd& v) const {
        const int n = vlen();
        switch (blk.kind) {
            case ConeKind::NonNeg:
                return v.cwiseQuotient(lambda);
            case ConeKind::Soc: {
                double l0 = lambda(0);
                VectorXd l1 = lambda.tail(n - 1);
                double det = sqr(l0) - l1.squaredNorm();
                VectorXd w(n);
                w(0) = (l0 * v(0) - l1.dot(v.tail(n - 1))) / det;
                w.tail(n - 1) = (v.tail(n - 1) - w(0) * l1) / l0;
                return w;
            }
            case ConeKind::Psd: {
                const int p = blk.size;
                MatrixXd lm = smat(lambda, p), vm = smat(v, p);
                MatrixXd wm(p, p);
                for (int i = 0; i < p; ++i)
                    for (int j = 0; j < p; ++j) wm(i, j) = 2.0 * vm(i, j) / (lm(i, i) + lm(j, j));
                return svec(0.5 * (wm + wm.transpose()));
            }
        }
        return v;
    }

    // Largest step alpha with u + alpha du staying in the cone (u interior).
    double max_step(const VectorXd& u, const VectorXd& du) const {
        const int n = vlen();
        switch (blk.kind) {
            case ConeKind::NonNeg: {
                double a = kInf;
                for (int i = 0; i < n; ++i)
                    if (du(i) < 0) a = std::min(a, -u(i) / du(i));
                return a;
            }
            case ConeKind::Soc: {
                double a = sqr(du(0)) - du.tail(n - 1).squaredNorm();
                double b = 2.0 * (u(0) * du(0) - u.tail(n - 1).dot(du.tail(n - 1)));
                double c = sqr(u(0)) - u.tail(n - 1).squaredNorm();
                return smallest_positive_root(a, b, c);
            }
            case ConeKind::Psd: {
                const int p = blk.size;
                MatrixXd um = smat(u, p);
                Eigen::LLT<MatrixXd> llt(um);
                if (llt.info() != Eigen::Success) return 0.0;
                MatrixXd l = llt.matrixL();
                MatrixXd m = l.triangularView<Eigen::Lower>().solve(smat(du, p));
                MatrixXd mt = m.transpose();
                m = l.triangularView<Eigen::Lower>().solve(mt);
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()),
                                                           Eigen::EigenvaluesOnly);
                double mn = es.eigenvalues().minCoeff();
                return mn >= 0 ? kInf : -1.0 / mn;
            }
        }
        return 0.0;
    }
};

struct Scaling {
    std::vector<BlockState> blocks;

    bool update(const VectorXd& s, const VectorXd& z) {
        for (auto& b : blocks) {
            if (!b.compute_scaling(s.segment(b.offset, b.vlen()), z.segment(b.offset, b.vlen())))
                return false;
        }
        return true;
    }

    template <typename F>
    VectorXd map(const VectorXd& v, F&& f) const {
        VectorXd out(v.size());
        for (const auto& b : blocks) out.segment(b.offset, b.vlen()) = f(b, v.segment(b.offset, b.vlen()));
        return out;
    }

    VectorXd hinv(const VectorXd& v) const {
        return map(v, [](const BlockState& b, const VectorXd& u) { return b.apply_hinv(u); });
    }
    VectorXd w(const VectorXd& v) const {
        return map(v, [](const BlockState& b, const VectorXd& u) { return b.apply_w(u); });
    }
    VectorXd wt(const VectorXd& v) const {
        return map(v, [](const BlockState& b, const VectorXd& u) { return b.apply_wt(u); });
    }
    VectorXd wti(const VectorXd& v) const {
        return map(v, [](const BlockState& b, const VectorXd& u) { return b.apply_wti(u); });
    }
    VectorXd lambda() const {
        int m = 0;
        for (const auto& b : blocks) m += b.vlen();
        VectorXd l(m);
        for (const auto& b : blocks) l.segment(b.offset, b.vlen()) = b.lambda;
        return l;
    }

    double max_step_all(const VectorXd& u, const VectorXd& du) const {
        double a = kInf;
        for (const auto& b : blocks)
            a = std::min(a, b.max_step(u.segment(b.offset, b.vlen()), du.segment(b.offset, b.vlen())));
        return a;
    }
};

// KKT subsystem [0 G^T; G -H] [p; q] = [a; b], eliminated through
// M = G^T H^{-1} G. One round of iterative refinement.
struct KktSolver {
    const MatrixXd& g;
    const Scaling& sc;
    Eigen::LDLT<MatrixXd> mf;
    MatrixXd hinv_g;  // H^{-1} G

    KktSolver(const MatrixXd& g_, const Scaling& sc_) : g(g_), sc(sc_) {
        const int n = static_cast<int>(g.cols());
        const int m = static_cast<int>(g.rows());
        hinv_g.resize(m, n);
        for (int j = 0; j < n; ++j) hinv_g.col(j) = sc.hinv(g.col(j));
        MatrixXd big = g.transpose() * hinv_g;
        big = 0.5 * (big + big.transpose());
        // tiny static regularization keeps the factorization alive for
        // rank-deficient corner cases
        big.diagonal().array() += 1e-13 * std::max(1.0, big.diagonal().cwiseAbs().maxCoeff());
        mf.compute(big);
    }

    void solve_once(const VectorXd& a, const VectorXd& b, VectorXd& p, VectorXd& q) const {
        VectorXd rhs = a + g.transpose() * sc.hinv(b);
        p = mf.solve(rhs);
        q = sc.hinv(g * p - b);
    }

    void solve(const VectorXd& a, const VectorXd& b, VectorXd& p, VectorXd& q) const {
        solve_once(a, b, p, q);
        // iterative refinement on the full 2x2 system
        for (int round = 0; round < 4; ++round) {
            VectorXd hq(q.size());
            for (const auto& blk : sc.blocks) {
                VectorXd qi = q.segment(blk.offset, blk.vlen());
                hq.segment(blk.offset, blk.vlen()) = blk.apply_wt(blk.apply_w(qi));
            }
            VectorXd ra = a - g.transpose() * q;
            VectorXd rb = b - (g * p - hq);
            double scale = std::max({1.0, a.norm(), b.norm()});
            if (ra.norm() + rb.norm() < 1e-14 * scale) break;
            VectorXd dp, dq;
            solve_once(ra, rb, dp, dq);
            p += dp;
            q += dq;
        }
    }
};

}  // namespace

Result solve(const VectorXd& c, const MatrixXd& g, const VectorXd& h,
             const std::vector<ConeBlock>& cones, const Options& opts) {
    Result res;
    const int n = static_cast<int>(c.size());
    const int m = static_cast<int>(g.rows());
    if (g.cols() != n || h.size() != m) {
        res.message = "ipm: dimension mismatch";
        return res;
    }

    Scaling sc;
    int off = 0;
    double degree = 0;
    for (const auto& cb : cones) {
        BlockState bs;
        bs.blk = cb;
        bs.offset = off;
        off += cb.vlen();
        degree += bs.degree();
        sc.blocks.push_back(std::move(bs));
    }
    if (off != m) {
        res.message = "ipm: cone sizes do not match rows of G";
        return res;
    }

    VectorXd x = VectorXd::Zero(n);
    VectorXd s(m), z(m);
    for (const auto& b : sc.blocks) {
        VectorXd e = b.identity();
        s.segment(b.offset, b.vlen()) = e;
        z.segment(b.offset, b.vlen()) = e;
    }
    double tau = 1.0, kappa = 1.0;

    const double hnorm = std::max(1.0, h.norm());
    const double cnorm = std::max(1.0, c.norm());

    // best iterate seen so far; late iterations can lose accuracy once the
    // scaling turns ill-conditioned, so keep the cleanest point
    struct Best {
        VectorXd x, s, z;
        double tau = 1.0, score = kInf, pres = kInf, dres = kInf, relgap = kInf, pobj = 0.0;
    } best;
    int stall_count = 0;

    // downstream users re-verify solutions against the original constraints,
    // so a stalled solve may exit at this relaxed tier
    auto accept_best = [&](const char* why) -> bool {
        if (best.pres > 1e3 * opts.feastol || best.dres > 1e3 * opts.feastol ||
            best.relgap > 1e3 * opts.reltol)
            return false;
        res.status = SolveStatus::Optimal;
        res.x = best.x / best.tau;
        res.s = best.s / best.tau;
        res.z = best.z / best.tau;
        res.obj = best.pobj;
        res.pres = best.pres;
        res.dres = best.dres;
        res.message = why;
        return true;
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        VectorXd rx = g.transpose() * z + c * tau;
        VectorXd rz = g * x + s - h * tau;
        double rtau = kappa + c.dot(x) + h.dot(z);
        double mu = (s.dot(z) + tau * kappa) / (degree + 1.0);

        // convergence checks (on the de-homogenized iterate)
        double pres = (rz / tau).norm() / hnorm;
        double dres = (rx / tau).norm() / cnorm;
        double pobj = c.dot(x) / tau;
        double dobj = -h.dot(z) / tau;
        double gap_abs = s.dot(z) / (tau * tau);
        double relgap = gap_abs / std::max({1.0, std::abs(pobj), std::abs(dobj)});
        res.iterations = iter;
        res.pres = pres;
        res.dres = dres;
        res.gap = gap_abs;
        if (opts.verbose)
            std::printf(
                "it %3d pobj %+.6e dobj %+.6e pres %.2e dres %.2e gap %.2e relgap %.2e tau %.2e "
                "kap %.2e mu %.2e\n",
                iter, pobj, dobj, pres, dres, gap_abs, relgap, tau, kappa, mu);
        if (pres <= opts.feastol && dres <= opts.feastol &&
            (gap_abs <= opts.abstol || relgap <= opts.reltol)) {
            res.status = SolveStatus::Optimal;
            res.x = x / tau;
            res.s = s / tau;
            res.z = z / tau;
            res.obj = pobj;
            return res;
        }
        double score = std::max({pres, dres, relgap});
        if (score < best.score * 0.9)
            stall_count = 0;
        else
            ++stall_count;
        if (score < best.score) best = {x, s, z, tau, score, pres, dres, relgap, pobj};
        // accept the best iterate once progress has stopped near the solution
        if (stall_count >= 4 && accept_best("stalled near optimum; best iterate returned"))
            return res;
        // infeasibility certificates
        double hz = h.dot(z), cx = c.dot(x);
        if (hz < -1e-12 && (g.transpose() * z).norm() / (-hz) <= opts.feastol * 1e2 &&
            tau <= 1e-8 * std::max(1.0, kappa)) {
            res.status = SolveStatus::PrimalInfeasible;
            res.z = z / (-hz);
            res.message = "primal infeasible (Farkas certificate found)";
            return res;
        }
        if (cx < -1e-12 && (g * x + s).norm() / (-cx) <= opts.feastol * 1e2 &&
            tau <= 1e-8 * std::max(1.0, kappa)) {
            res.status = SolveStatus::DualInfeasible;
            res.x = x / (-cx);
            res.message = "dual infeasible (unboundedness certificate found)";
            return res;
        }

        if (!sc.update(s, z)) {
            if (accept_best("scaling breakdown; best iterate returned")) return res;
            res.status = SolveStatus::NumericalFailure;
            res.message = "ipm: iterate left the cone interior";
            return res;
        }
        VectorXd lam = sc.lambda();

        KktSolver kkt(g, sc);

        // constant-column solve (coefficient of dtau)
        VectorXd u1, v1;
        kkt.solve(-c, h, u1, v1);

        auto direction = [&](double sigma, const VectorXd& ds_aff, const VectorXd& dz_aff,
                             double dtau_aff, double dkappa_aff, bool corrector, VectorXd& dx,
                             VectorXd& ds, VectorXd& dz, double& dtau, double& dkappa) -> bool {
            // lambda-space complementarity target
            VectorXd dtil(m);
            double btk;
            {
                VectorXd target(m);
                for (const auto& b : sc.blocks) {
                    int o = b.offset, l = b.vlen();
                    VectorXd t = b.lambda;  // lambda o lambda target part handled via division below
                    VectorXd rhs_blk = b.jordan_prod(b.lambda, b.lambda);
                    if (corrector) {
                        VectorXd wds = b.apply_wti(ds_aff.segment(o, l));
                        VectorXd wdz = b.apply_w(dz_aff.segment(o, l));
                        rhs_blk += b.jordan_prod(wds, wdz);
                    }
                    rhs_blk -= sigma * mu * b.identity();
                    target.segment(o, l) = b.jordan_div_lambda(rhs_blk);
                }
                dtil = target;
                btk = -tau * kappa + sigma * mu - (corrector ? dtau_aff * dkappa_aff : 0.0);
            }
            double eta = 1.0 - sigma;
            VectorXd bx = -eta * rx;
            VectorXd bz = -eta * rz + sc.wt(dtil);
            double btau = -eta * rtau - btk / tau;

            VectorXd u2, v2;
            kkt.solve(bx, bz, u2, v2);
            double denom = c.dot(u1) + h.dot(v1) - kappa / tau;
            if (std::abs(denom) < 1e-300) return false;
            dtau = (btau - c.dot(u2) - h.dot(v2)) / denom;
            dx = u2 + dtau * u1;
            dz = v2 + dtau * v1;
            ds = -sc.wt(dtil + sc.w(dz));
            dkappa = (btk - kappa * dtau) / tau;
            return true;
        };

        // affine (predictor) direction
        VectorXd dx_a, ds_a, dz_a;
        double dtau_a, dkap_a;
        if (!direction(0.0, VectorXd(), VectorXd(), 0, 0, false, dx_a, ds_a, dz_a, dtau_a, dkap_a)) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "ipm: singular KKT system";
            return res;
        }
        double alpha_a = std::min({1.0, sc.max_step_all(s, ds_a), sc.max_step_all(z, dz_a)});
        if (dtau_a < 0) alpha_a = std::min(alpha_a, -tau / dtau_a);
        if (dkap_a < 0) alpha_a = std::min(alpha_a, -kappa / dkap_a);
        double sigma = std::pow(1.0 - alpha_a, 3);
        sigma = std::min(1.0, std::max(sigma, 1e-8));

        // combined (corrector) direction
        VectorXd dx, ds, dz;
        double dtau, dkap;
        if (!direction(sigma, ds_a, dz_a, dtau_a, dkap_a, true, dx, ds, dz, dtau, dkap)) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "ipm: singular KKT system (corrector)";
            return res;
        }
        double alpha = std::min({1.0 / opts.step_frac, sc.max_step_all(s, ds), sc.max_step_all(z, dz)});
        if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
        if (dkap < 0) alpha = std::min(alpha, -kappa / dkap);
        alpha *= opts.step_frac;
        alpha = std::min(alpha, 1.0);
        if (!std::isfinite(alpha) || alpha <= 1e-14) {
            if (accept_best("step collapsed; best iterate returned")) return res;
            res.status = SolveStatus::NumericalFailure;
            res.message = "ipm: step length collapsed";
            return res;
        }

        x += alpha * dx;
        s += alpha * ds;
        z += alpha * dz;
        tau += alpha * dtau;
        kappa += alpha * dkap;
        if (opts.verbose) {
            for (const auto& b : sc.blocks) {
                if (b.blk.kind != ConeKind::Psd) continue;
                Eigen::SelfAdjointEigenSolver<MatrixXd> e1(smat(s.segment(b.offset, b.vlen()), b.blk.size));
                Eigen::SelfAdjointEigenSolver<MatrixXd> e2(smat(z.segment(b.offset, b.vlen()), b.blk.size));
                std::printf("   post-step alpha %.3e psd block mineig s %.3e z %.3e\n", alpha,
                            e1.eigenvalues().minCoeff(), e2.eigenvalues().minCoeff());
            }
        }
    }

    // classify at the iteration limit
    double hz = h.dot(z), cx = c.dot(x);
    if (tau < 1e-6 * std::max(1.0, kappa)) {
        if (hz < 0) {
            res.status = SolveStatus::PrimalInfeasible;
            res.z = z / (-hz);
            res.message = "primal infeasible (iteration-limit classification)";
            return res;
        }
        if (cx < 0) {
            res.status = SolveStatus::DualInfeasible;
            res.x = x / (-cx);
            res.message = "dual infeasible (iteration-limit classification)";
            return res;
        }
    }
    if (accept_best("iteration limit; best iterate returned")) return res;
    res.status = SolveStatus::IterationLimit;
    res.x = x / tau;
    res.s = s / tau;
    res.z = z / tau;
    res.obj = c.dot(x) / tau;
    res.message = "iteration limit reached";
    return res;
}

}  // namespace flextube::ipm
