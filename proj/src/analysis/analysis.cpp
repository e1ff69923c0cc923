#include "analysis/analysis.hpp"

#include <cmath>

#include "analysis/dare.hpp"

namespace flextube {

namespace {

struct ProbeResult {
    SymMatrix p;
    VectorXd coeffs1, coeffs2;
    double mu = 0.0;
    double margin = 0.0;
};

// Margin-maximizing feasibility probe of the three analysis LMIs at a fixed
// gamma. A small trace regularizer removes the homogeneous recession
// directions; feasibility is judged on the margin variable itself.
std::optional<ProbeResult> probe_analysis(const LoopStacks& st, const MultiplierClass& cls,
                                          double rho, double gamma, const AnalysisOptions& opts) {
    const double alpha = rho * rho / (1.0 - rho * rho);
    ConicProgram prog;
    MatVar pv = prog.sym(st.nstate);
    MultiplierVars mv1 = add_multiplier(prog, cls);
    MultiplierVars mv2 = add_multiplier(prog, cls);
    int mu_v = prog.scalar_nonneg();
    prog.constrain_nonneg(AffineScalar(gamma) - prog.expr(mu_v));
    int t = prog.scalar();
    prog.constrain_nonneg(prog.expr(t) + AffineScalar(1.0));

    AffineMat p = prog.expr(pv);
    AffineMat x1p = pad_state_block(mv1.x, st.nstate);
    AffineMat x2p = pad_state_block(mv2.x, st.nstate);
    AffineScalar beta = AffineScalar(alpha * gamma) + prog.expr(mu_v) * (-alpha);
    const int nv = static_cast<int>(st.t_state.cols());
    AffineMat ti(nv, nv);
    ti.add_term(t, MatrixXd::Identity(nv, nv));
    AffineMat tis(st.nstate, st.nstate);
    tis.add_term(t, MatrixXd::Identity(st.nstate, st.nstate));

    prog.constrain_neg_semidef(stability_lmi(st, p, mv1.m + mv2.m, prog.expr(mu_v)) - ti);
    prog.constrain_neg_semidef(
        performance_lmi(st, p, x1p, x2p, mv2.m,
                        AffineMat::constant((alpha / gamma) *
                                            MatrixXd::Identity(st.nperf, st.nperf)),
                        beta) -
        ti);
    prog.constrain_neg_semidef(coupling_lmi(p, x1p, x2p) * (-1.0) - tis);

    AffineScalar reg(0.0);
    for (int i = 0; i < st.nstate; ++i) reg = reg + prog.expr(pv.id_at(i, i));
    reg = reg + mv1.coeff_sum + mv2.coeff_sum + prog.expr(mu_v);
    prog.minimize(prog.expr(t) + reg * opts.reg_weight);

    auto sol = prog.try_solve(opts.solver);
    if (sol.status != ProgStatus::Optimal || sol.value(t) > -opts.eps) return std::nullopt;
    ProbeResult r;
    r.p = SymMatrix(sol.value(pv));
    r.coeffs1.resize(cls.size());
    r.coeffs2.resize(cls.size());
    for (int i = 0; i < cls.size(); ++i) {
        r.coeffs1(i) = std::max(0.0, sol.value(mv1.coeffs[static_cast<size_t>(i)]));
        r.coeffs2(i) = std::max(0.0, sol.value(mv2.coeffs[static_cast<size_t>(i)]));
    }
    r.mu = std::max(0.0, std::min(gamma, sol.value(mu_v)));
    r.margin = sol.objective;
    return r;
}

AnalysisCertificate make_certificate(const Interconnection& sigma_rho, const MultiplierClass& cls,
                                     const ProbeResult& pr, double gamma, double rho,
                                     const AnalysisOptions& opts) {
    AnalysisCertificate cert;
    cert.p = pr.p;
    cert.coeffs1 = pr.coeffs1;
    cert.coeffs2 = pr.coeffs2;
    cert.pair1 = cls.combine(pr.coeffs1);
    cert.pair2 = cls.combine(pr.coeffs2);
    cert.mu = pr.mu;
    cert.gamma = gamma;
    cert.rho = rho;
    AnalysisMargins m = verify_analysis(sigma_rho, cls, cert);
    if (!m.pass(opts.eps))
        throw NumericalFailure("analysis certificate failed re-verification (margins " +
                               std::to_string(m.stab) + ", " + std::to_string(m.perf) + ", " +
                               std::to_string(m.coupling_mineig) + ")");
    cert.margin_stab = m.stab;
    cert.margin_perf = m.perf;
    cert.margin_coupling = m.coupling_mineig;
    return cert;
}

}  // namespace

MultiplierPair AnalysisCertificate::combined_pair() const {
    return {SymMatrix(pair1.m.mat() + pair2.m.mat()), SymMatrix(pair1.x.mat() + pair2.x.mat())};
}

AnalysisMargins verify_analysis(const Interconnection& sigma_rho, const MultiplierClass& cls,
                                const AnalysisCertificate& cert) {
    LoopStacks st = LoopStacks::analysis(sigma_rho);
    const double alpha = cert.alpha();
    MultiplierPair comb = cert.combined_pair();
    AffineMat p = AffineMat::constant(cert.p.mat());
    AffineMat x1p = pad_state_block(AffineMat::constant(cert.pair1.x.mat()), st.nstate);
    AffineMat x2p = pad_state_block(AffineMat::constant(cert.pair2.x.mat()), st.nstate);
    std::vector<double> empty;
    AnalysisMargins m{};
    m.stab = psd_margin(SymMatrix(
        stability_lmi(st, p, AffineMat::constant(comb.m.mat()), AffineScalar(cert.mu)).eval(empty)));
    m.perf = psd_margin(SymMatrix(
        performance_lmi(st, p, x1p, x2p, AffineMat::constant(cert.pair2.m.mat()),
                        AffineMat::constant((alpha / cert.gamma) *
                                            MatrixXd::Identity(st.nperf, st.nperf)),
                        AffineScalar(cert.beta()))
            .eval(empty)));
    m.coupling_mineig = min_eigenvalue(SymMatrix(coupling_lmi(p, x1p, x2p).eval(empty)));
    return m;
}

AnalysisCertificate analyze(const Interconnection& gk, const MultiplierClass& cls, double rho,
                            const AnalysisOptions& opts) {
    Interconnection sigma = augment_filter(gk, cls.filter(), rho);
    LoopStacks st = LoopStacks::analysis(sigma);

    double lo = std::log(opts.gamma_lo), hi = std::log(opts.gamma_hi);
    auto top = probe_analysis(st, cls, rho, std::exp(hi), opts);
    if (!top)
        throw Infeasible("analyze: infeasible at gamma = " + std::to_string(opts.gamma_hi) +
                         " (controller not robustly stabilizing for this class and rho)");
    ProbeResult best = *top;
    double best_gamma = std::exp(hi);
    for (int it = 0; it < opts.bisect_iters; ++it) {
        double mid = 0.5 * (lo + hi);
        auto r = probe_analysis(st, cls, rho, std::exp(mid), opts);
        if (r) {
            hi = mid;
            best = *r;
            best_gamma = std::exp(mid);
        } else {
            lo = mid;
        }
    }
    return make_certificate(sigma, cls, best, best_gamma, rho, opts);
}

Interconnection select_output_rows(const Interconnection& ic, const std::string& output,
                                   const std::vector<int>& rows) {
    const MatrixXd& m = ic.full_matrix();
    std::vector<Interconnection::Part> outs;
    std::vector<int> keep;  // absolute row indices of m to keep
    for (int i = 0; i < ic.nstate(); ++i) keep.push_back(i);
    int off = ic.nstate();
    for (const auto& o : ic.outputs()) {
        if (o.name == output) {
            for (int r : rows) {
                require(r >= 0 && r < o.dim, "select_output_rows: row out of range");
                keep.push_back(off + r);
            }
            outs.push_back({o.name, static_cast<int>(rows.size())});
        } else {
            for (int r = 0; r < o.dim; ++r) keep.push_back(off + r);
            outs.push_back(o);
        }
        off += o.dim;
    }
    MatrixXd sub(static_cast<int>(keep.size()), m.cols());
    for (size_t i = 0; i < keep.size(); ++i) sub.row(static_cast<int>(i)) = m.row(keep[i]);
    return Interconnection(ic.states(), ic.inputs(), outs, std::move(sub), ic.rho());
}

RowwiseCertificates analyze_rowwise(const Interconnection& gk, const MultiplierClass& cls,
                                    const std::vector<double>& rho_grid,
                                    const AnalysisOptions& opts) {
    require(!rho_grid.empty(), "analyze_rowwise: empty rho grid");
    const int nz = gk.output_dim("z");

    // full certificate per grid point bounds each row's bisection from above
    std::vector<AnalysisCertificate> fulls;
    for (double rho : rho_grid) fulls.push_back(analyze(gk, cls, rho, opts));

    RowwiseCertificates rows;
    for (int i = 0; i < nz; ++i) {
        Interconnection gki = select_output_rows(gk, "z", {i});
        std::optional<AnalysisCertificate> best;
        std::string last_err = "infeasible";
        for (size_t gi = 0; gi < rho_grid.size(); ++gi) {
            const double rho = rho_grid[gi];
            AnalysisOptions row_opts = opts;
            row_opts.gamma_hi = fulls[gi].gamma;
            try {
                AnalysisCertificate c = analyze(gki, cls, rho, row_opts);
                if (!best || c.gamma < best->gamma) best = c;
            } catch (const std::exception& e) {
                last_err = e.what();
            }
        }
        if (!best)
            throw Infeasible("analyze_rowwise: row " + std::to_string(i) + " failed: " + last_err);
        rows.push_back(*best);
    }
    return rows;
}

namespace {

struct JointProbe {
    AnalysisCertificate ana;
    EstimatorAnalysisCertificate est;
    double objective = 0.0;
};

std::optional<JointProbe> probe_joint(const Interconnection& sigma, const Interconnection& xi,
                                      const MultiplierClass& cls, double rho, double gamma,
                                      double weight_gamma, const AnalysisOptions& opts) {
    LoopStacks st = LoopStacks::analysis(sigma);
    LoopStacks sto = LoopStacks::estimation(xi);
    const double alpha = rho * rho / (1.0 - rho * rho);
    const int nchi = st.nstate, nxi = sto.nstate;

    ConicProgram prog;
    MatVar pv = prog.sym(nchi);
    MatVar pov = prog.sym(nxi);
    MultiplierVars mv1 = add_multiplier(prog, cls);
    MultiplierVars mv2 = add_multiplier(prog, cls);
    MultiplierVars mv3 = add_multiplier(prog, cls);
    MultiplierVars mv4 = add_multiplier(prog, cls);
    int mu_v = prog.scalar_nonneg();
    prog.constrain_nonneg(AffineScalar(gamma) - prog.expr(mu_v));
    int muo_v = prog.scalar_nonneg();
    int go_v = prog.scalar_nonneg();
    prog.constrain_nonneg(prog.expr(go_v) - prog.expr(muo_v));
    prog.constrain_nonneg(AffineScalar(opts.gamma_hi) - prog.expr(go_v));

    AffineMat p = prog.expr(pv), po = prog.expr(pov);
    AffineMat x1p = pad_state_block(mv1.x, nchi), x2p = pad_state_block(mv2.x, nchi);
    AffineMat x3p = pad_state_block(mv3.x, nxi), x4p = pad_state_block(mv4.x, nxi);
    AffineScalar beta = AffineScalar(alpha * gamma) + prog.expr(mu_v) * (-alpha);
    AffineScalar beta_o = (prog.expr(go_v) - prog.expr(muo_v)) * alpha;

    const double eps = opts.eps;
    prog.constrain_neg_semidef(stability_lmi(st, p, mv1.m + mv2.m, prog.expr(mu_v)), eps);
    prog.constrain_neg_semidef(
        performance_lmi(st, p, x1p, x2p, mv2.m,
                        AffineMat::constant((alpha / gamma) *
                                            MatrixXd::Identity(st.nperf, st.nperf)),
                        beta),
        eps);
    prog.constrain_pos_semidef(coupling_lmi(p, x1p, x2p), eps);
    prog.constrain_neg_semidef(
        stability_lmi(sto, po, mv1.m + mv2.m + mv3.m + mv4.m, prog.expr(muo_v)), eps);
    prog.constrain_neg_semidef(performance_lmi(sto, po, x3p, x4p, mv4.m, p, beta_o), eps);

    AffineScalar reg(0.0);
    for (int i = 0; i < nchi; ++i) reg = reg + prog.expr(pv.id_at(i, i));
    for (int i = 0; i < nxi; ++i) reg = reg + prog.expr(pov.id_at(i, i));
    reg = reg + mv1.coeff_sum + mv2.coeff_sum + mv3.coeff_sum + mv4.coeff_sum;
    prog.minimize(prog.expr(go_v) + reg * opts.reg_weight);

    auto sol = prog.try_solve(opts.solver);
    if (sol.status != ProgStatus::Optimal) return std::nullopt;

    JointProbe jp;
    jp.ana.p = SymMatrix(sol.value(pv));
    jp.ana.coeffs1.resize(cls.size());
    jp.ana.coeffs2.resize(cls.size());
    jp.est.coeffs3.resize(cls.size());
    jp.est.coeffs4.resize(cls.size());
    for (int i = 0; i < cls.size(); ++i) {
        jp.ana.coeffs1(i) = std::max(0.0, sol.value(mv1.coeffs[static_cast<size_t>(i)]));
        jp.ana.coeffs2(i) = std::max(0.0, sol.value(mv2.coeffs[static_cast<size_t>(i)]));
        jp.est.coeffs3(i) = std::max(0.0, sol.value(mv3.coeffs[static_cast<size_t>(i)]));
        jp.est.coeffs4(i) = std::max(0.0, sol.value(mv4.coeffs[static_cast<size_t>(i)]));
    }
    jp.ana.pair1 = cls.combine(jp.ana.coeffs1);
    jp.ana.pair2 = cls.combine(jp.ana.coeffs2);
    jp.ana.mu = std::max(0.0, std::min(gamma, sol.value(mu_v)));
    jp.ana.gamma = gamma;
    jp.ana.rho = rho;
    jp.est.p_o = SymMatrix(sol.value(pov));
    jp.est.pair3 = cls.combine(jp.est.coeffs3);
    jp.est.pair4 = cls.combine(jp.est.coeffs4);
    jp.est.mu_o = std::max(0.0, sol.value(muo_v));
    jp.est.gamma_o = sol.value(go_v);
    jp.est.rho = rho;
    jp.objective = weight_gamma * gamma + jp.est.gamma_o;
    return jp;
}

}  // namespace

std::pair<AnalysisCertificate, EstimatorAnalysisCertificate> joint_refine(
    const Interconnection& gk, const Estimator& l, const MultiplierClass& cls,
    const std::vector<double>& rho_grid, double weight_gamma, const AnalysisOptions& opts) {
    require(!rho_grid.empty(), "joint_refine: empty rho grid");
    std::optional<JointProbe> best;
    double best_rho = rho_grid.front();

    for (double rho : rho_grid) {
        Interconnection sigma = augment_filter(gk, cls.filter(), rho);
        Interconnection xi = augment_estimator(sigma, l, rho);
        double gamma_min;
        try {
            gamma_min = analyze(gk, cls, rho, opts).gamma;
        } catch (const Infeasible&) {
            continue;
        }
        // scalar search on gamma >= gamma_min (golden section in log space)
        double lo = std::log(gamma_min), hi = std::log(std::min(opts.gamma_hi, gamma_min * 50.0));
        auto eval = [&](double lg) -> std::pair<double, std::optional<JointProbe>> {
            auto r = probe_joint(sigma, xi, cls, rho, std::exp(lg), weight_gamma, opts);
            if (!r) return {std::numeric_limits<double>::infinity(), std::nullopt};
            return {r->objective, r};
        };
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo, b = hi;
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
        auto f1 = eval(c1), f2 = eval(c2);
        for (int it = 0; it < 10; ++it) {
            if (f1.first <= f2.first) {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - gr * (b - a);
                f1 = eval(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + gr * (b - a);
                f2 = eval(c2);
            }
        }
        auto fl = eval(lo);
        for (const auto& cand : {fl, f1, f2}) {
            if (cand.second && (!best || cand.first < best->objective)) {
                best = *cand.second;
                best_rho = rho;
            }
        }
    }
    if (!best) throw Infeasible("joint_refine: infeasible at every rho grid point");

    // re-verify both certificate families at the winning point
    Interconnection sigma = augment_filter(gk, cls.filter(), best_rho);
    Interconnection xi = augment_estimator(sigma, l, best_rho);
    AnalysisMargins am = verify_analysis(sigma, cls, best->ana);
    if (!am.pass(opts.eps)) throw NumericalFailure("joint_refine: analysis margins failed");
    best->ana.margin_stab = am.stab;
    best->ana.margin_perf = am.perf;
    best->ana.margin_coupling = am.coupling_mineig;

    LoopStacks sto = LoopStacks::estimation(xi);
    MultiplierPair comb = best->ana.combined_pair();
    std::vector<double> empty;
    AffineMat po = AffineMat::constant(best->est.p_o.mat());
    MatrixXd mo = comb.m.mat() + best->est.pair3.m.mat() + best->est.pair4.m.mat();
    best->est.margin_stab = psd_margin(SymMatrix(
        stability_lmi(sto, po, AffineMat::constant(mo), AffineScalar(best->est.mu_o)).eval(empty)));
    best->est.margin_perf = psd_margin(SymMatrix(
        performance_lmi(sto, po,
                        pad_state_block(AffineMat::constant(best->est.pair3.x.mat()), sto.nstate),
                        pad_state_block(AffineMat::constant(best->est.pair4.x.mat()), sto.nstate),
                        AffineMat::constant(best->est.pair4.m.mat()),
                        AffineMat::constant(best->ana.p.mat()), AffineScalar(best->est.beta_o()))
            .eval(empty)));
    if (best->est.margin_stab > -opts.eps / 2 || best->est.margin_perf > -opts.eps / 2)
        throw NumericalFailure("joint_refine: estimation margins failed");
    return {best->ana, best->est};
}

namespace {

bool pbh_ok(const MatrixXd& a, const MatrixXd& b, double tol) {
    const int n = static_cast<int>(a.rows());
    if (b.cols() == 0) return spectral_radius(a) < 1.0 - tol;
    Eigen::ComplexEigenSolver<MatrixXd> es(a);
    for (int i = 0; i < n; ++i) {
        std::complex<double> lam = es.eigenvalues()(i);
        if (std::abs(lam) < 1.0 - tol) continue;
        Eigen::MatrixXcd pencil(n, n + b.cols());
        pencil << lam * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>(),
            b.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
        if (svd.singularValues()(n - 1) < tol * svd.singularValues()(0)) return false;
    }
    return true;
}

}  // namespace

Controller bootstrap_controller(const Plant& g, const MultiplierClass& cls, double rho,
                                const BootstrapOptions& opts) {
    g.validate();
    if (!pbh_ok(g.a, g.b_u, 1e-8))
        throw NoStabilizingController("bootstrap: plant is not stabilizable");
    if (!pbh_ok(g.a.transpose(), g.c_y.transpose(), 1e-8))
        throw NoStabilizingController("bootstrap: plant is not detectable");

    const int nx = g.nx(), nu = g.nu(), ny = g.ny();
    const MatrixXd a_s = g.a / rho, bu_s = g.b_u / rho;

    auto feedback = [&](double q_weight) -> MatrixXd {
        // LQR on the rho-scaled plant, with the uncertainty-channel output
        // folded into the stage cost
        MatrixXd qx = MatrixXd::Identity(nx, nx) + q_weight * g.c_q.transpose() * g.c_q;
        MatrixXd ru = MatrixXd::Identity(nu, nu) + q_weight * g.d_qu.transpose() * g.d_qu;
        MatrixXd nxu = q_weight * g.c_q.transpose() * g.d_qu;
        return dlqr_gain(a_s, bu_s, SymMatrix(qx), SymMatrix(ru), nxu);
    };

    // observer gain candidates: dual LQR at several measurement weights,
    // plus the deadbeat gain when the full state is measured cleanly
    std::vector<MatrixXd> observer_gains;
    MatrixXd w_state = MatrixXd::Identity(nx, nx) + g.b_p * g.b_p.transpose() +
                       g.b_d * g.b_d.transpose();
    for (double v : {1.0, 1e-2, 1e-4}) {
        MatrixXd ht = dlqr_gain(a_s.transpose(), g.c_y.transpose(), SymMatrix(w_state),
                                SymMatrix((v * MatrixXd::Identity(ny, ny)).eval()),
                                MatrixXd::Zero(nx, ny));
        observer_gains.push_back(-rho * ht.transpose());
    }
    if (ny == nx && g.d_yp.norm() == 0.0 && g.d_yd.norm() == 0.0 &&
        std::abs(g.c_y.determinant()) > 1e-8) {
        observer_gains.push_back(g.a * g.c_y.inverse());  // A - H C_y = 0
    }

    const bool clean_state_measurement = ny == nx && g.d_yp.norm() == 0.0 &&
                                         g.d_yd.norm() == 0.0 &&
                                         std::abs(g.c_y.determinant()) > 1e-8;

    auto assemble = [&](const MatrixXd& f, const MatrixXd& h) -> Controller {
        Controller k;
        k.a = g.a + g.b_u * f - h * g.c_y;
        k.b = h;
        k.c = f;
        k.d = MatrixXd::Zero(nu, ny);
        return k;
    };

    std::optional<Controller> best_k;
    double best_gamma = std::numeric_limits<double>::infinity();
    int rounds = 0;
    double up = opts.q_weight0, down = opts.q_weight0;
    for (int step = 0; step < opts.max_rounds && rounds < opts.max_rounds; ++step) {
        double w = (step == 0) ? opts.q_weight0 : (step % 2 == 1 ? (up *= 4.0) : (down /= 4.0));
        MatrixXd f = feedback(w);
        std::vector<Controller> candidates;
        for (const auto& h : observer_gains) candidates.push_back(assemble(f, h));
        if (clean_state_measurement) {
            // static u = F x when the state is measured exactly
            Controller ks = Controller::zero(0, ny, nu);
            ks.d = f * g.c_y.inverse();
            candidates.push_back(ks);
        }
        for (const auto& k : candidates) {
            if (rounds++ >= opts.max_rounds) break;
            try {
                AnalysisCertificate cert = analyze(close_controller(g, k), cls, rho, opts.analysis);
                if (cert.gamma < best_gamma) {
                    best_gamma = cert.gamma;
                    best_k = k;
                }
            } catch (const Infeasible&) {
            } catch (const NumericalFailure&) {
            }
        }
    }
    if (!best_k)
        throw NoStabilizingController(
            "bootstrap: no weight setting produced a controller passing the analysis");
    return *best_k;
}

}  // namespace flextube
