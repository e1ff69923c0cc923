#include "plant/system.hpp"

namespace flextube {

void Plant::validate() const {
    require(a.rows() == a.cols(), "plant: A not square");
    const int x = nx(), p = np(), d = nd(), u = nu(), q = nq(), z = nz(), y = ny();
    require(b_p.rows() == x && b_d.rows() == x && b_u.rows() == x, "plant: B row dims");
    require(c_q.cols() == x && c_z.cols() == x && c_y.cols() == x, "plant: C col dims");
    require(d_qp.rows() == q && d_qp.cols() == p, "plant: D_qp dims");
    require(d_qd.rows() == q && d_qd.cols() == d, "plant: D_qd dims");
    require(d_qu.rows() == q && d_qu.cols() == u, "plant: D_qu dims");
    require(d_zp.rows() == z && d_zp.cols() == p, "plant: D_zp dims");
    require(d_zd.rows() == z && d_zd.cols() == d, "plant: D_zd dims");
    require(d_zu.rows() == z && d_zu.cols() == u, "plant: D_zu dims");
    require(d_yp.rows() == y && d_yp.cols() == p, "plant: D_yp dims");
    require(d_yd.rows() == y && d_yd.cols() == d, "plant: D_yd dims");
}

Controller Controller::zero(int nk, int ny, int nu) {
    Controller k;
    k.a = MatrixXd::Zero(nk, nk);
    k.b = MatrixXd::Zero(nk, ny);
    k.c = MatrixXd::Zero(nu, nk);
    k.d = MatrixXd::Zero(nu, ny);
    return k;
}

Estimator Estimator::zero(int nlam, int ny, int ntheta) {
    Estimator l;
    l.a = MatrixXd::Zero(nlam, nlam);
    l.b = MatrixXd::Zero(nlam, ny);
    l.c = MatrixXd::Zero(ntheta, nlam);
    l.d = MatrixXd::Zero(ntheta, ny);
    return l;
}

Interconnection::Interconnection(std::vector<Part> states, std::vector<Part> inputs,
                                 std::vector<Part> outputs, MatrixXd m, double rho)
    : states_(std::move(states)), inputs_(std::move(inputs)), outputs_(std::move(outputs)),
      m_(std::move(m)), rho_(rho) {
    for (const auto& s : states_) nstate_ += s.dim;
    for (const auto& i : inputs_) nin_ += i.dim;
    for (const auto& o : outputs_) nout_ += o.dim;
    require(m_.rows() == nstate_ + nout_ && m_.cols() == nstate_ + nin_,
            "interconnection: partition sizes do not sum to matrix dimensions");
}

const Interconnection::Part& Interconnection::find(const std::vector<Part>& parts,
                                                   const std::string& name) {
    for (const auto& p : parts)
        if (p.name == name) return p;
    throw DimensionError("interconnection: unknown channel '" + name + "'");
}

int Interconnection::state_offset(const std::string& name) const {
    int off = 0;
    for (const auto& s : states_) {
        if (s.name == name) return off;
        off += s.dim;
    }
    throw DimensionError("interconnection: unknown state partition '" + name + "'");
}

int Interconnection::input_offset(const std::string& name) const {
    int off = nstate_;
    for (const auto& i : inputs_) {
        if (i.name == name) return off;
        off += i.dim;
    }
    throw DimensionError("interconnection: unknown input '" + name + "'");
}

int Interconnection::output_offset(const std::string& name) const {
    int off = nstate_;
    for (const auto& o : outputs_) {
        if (o.name == name) return off;
        off += o.dim;
    }
    throw DimensionError("interconnection: unknown output '" + name + "'");
}

MatrixXd Interconnection::a() const { return m_.topLeftCorner(nstate_, nstate_); }

MatrixXd Interconnection::b(const std::string& input) const {
    return m_.block(0, input_offset(input), nstate_, input_dim(input));
}

MatrixXd Interconnection::c(const std::string& output) const {
    return m_.block(output_offset(output), 0, output_dim(output), nstate_);
}

MatrixXd Interconnection::d(const std::string& output, const std::string& input) const {
    return m_.block(output_offset(output), input_offset(input), output_dim(output),
                    input_dim(input));
}

std::pair<VectorXd, std::map<std::string, VectorXd>> Interconnection::step(
    const VectorXd& state, const std::map<std::string, VectorXd>& inputs) const {
    require(state.size() == nstate_, "step: state dimension mismatch");
    VectorXd stacked(nstate_ + nin_);
    stacked.head(nstate_) = state;
    int off = nstate_;
    for (const auto& i : inputs_) {
        auto it = inputs.find(i.name);
        if (it == inputs.end()) {
            stacked.segment(off, i.dim).setZero();
        } else {
            require(it->second.size() == i.dim, "step: input '" + i.name + "' dimension mismatch");
            stacked.segment(off, i.dim) = it->second;
        }
        off += i.dim;
    }
    VectorXd all = m_ * stacked;
    VectorXd next = all.head(nstate_);
    std::map<std::string, VectorXd> outputs;
    off = nstate_;
    for (const auto& o : outputs_) {
        outputs[o.name] = all.segment(off, o.dim);
        off += o.dim;
    }
    return {next, outputs};
}

Interconnection close_controller(const Plant& g, const Controller& k) {
    g.validate();
    const int nx = g.nx(), nk = k.nk(), nu = g.nu(), ny = g.ny();
    require(k.b.cols() == ny && k.c.rows() == nu && k.d.rows() == nu && k.d.cols() == ny,
            "close_controller: controller channel dims");
    require(k.a.cols() == nk && k.b.rows() == nk && k.c.cols() == nk,
            "close_controller: controller state dims");
    const int nt = nx + nk;

    MatrixXd a(nt, nt);
    a << g.a + g.b_u * k.d * g.c_y, g.b_u * k.c, k.b * g.c_y, k.a;

    auto b_col = [&](const MatrixXd& b_i, const MatrixXd& d_yi) {
        MatrixXd b(nt, b_i.cols());
        b << b_i + g.b_u * k.d * d_yi, k.b * d_yi;
        return b;
    };
    MatrixXd b_p = b_col(g.b_p, g.d_yp);
    MatrixXd b_d = b_col(g.b_d, g.d_yd);
    MatrixXd b_u(nt, nu);
    b_u << g.b_u, MatrixXd::Zero(nk, nu);  // no u-feedthrough to y

    auto rows = [&](const MatrixXd& c_j, const MatrixXd& d_ju) {
        MatrixXd c(c_j.rows(), nt);
        c << c_j + d_ju * k.d * g.c_y, d_ju * k.c;
        return c;
    };
    auto feed = [&](const MatrixXd& d_ji, const MatrixXd& d_ju, const MatrixXd& d_yi) {
        return (d_ji + d_ju * k.d * d_yi).eval();
    };

    MatrixXd zero_yu = MatrixXd::Zero(ny, nu);
    const int rows_total = nt + g.nq() + g.nz() + ny;
    const int cols_total = nt + g.np() + g.nd() + nu;
    MatrixXd m(rows_total, cols_total);
    m << a, b_p, b_d, b_u,
        rows(g.c_q, g.d_qu), feed(g.d_qp, g.d_qu, g.d_yp), feed(g.d_qd, g.d_qu, g.d_yd), g.d_qu,
        rows(g.c_z, g.d_zu), feed(g.d_zp, g.d_zu, g.d_yp), feed(g.d_zd, g.d_zu, g.d_yd), g.d_zu,
        rows(g.c_y, MatrixXd::Zero(ny, nu)), g.d_yp, g.d_yd, zero_yu;

    return Interconnection({{"theta", nt}},
                           {{"p", g.np()}, {"d", g.nd()}, {"u", nu}},
                           {{"q", g.nq()}, {"z", g.nz()}, {"y", ny}}, std::move(m));
}

Interconnection augment_filter(const Interconnection& gk, const Filter& psi, double rho) {
    require(rho > 0.0 && rho < 1.0, "augment_filter: rho outside (0,1)");
    const int nt = gk.nstate();
    const int np = gk.input_dim("p"), nd = gk.input_dim("d");
    const int nq = gk.output_dim("q"), nz = gk.output_dim("z"), ny = gk.output_dim("y");
    const int npsi = psi.npsi(), ns = psi.ns();
    require(psi.b_q.cols() == nq && psi.b_p.cols() == np, "augment_filter: filter input dims");
    require(psi.d_q.rows() == ns && psi.d_p.rows() == ns, "augment_filter: filter output dims");
    const int nchi = npsi + nt;
    const int nw = nq + nd;

    const double ri = 1.0 / rho;
    MatrixXd a_r = ri * gk.a();
    MatrixXd bp_r = ri * gk.b("p");
    MatrixXd bd_r = ri * gk.b("d");
    MatrixXd cq = gk.c("q"), dqp = gk.d("q", "p"), dqd = gk.d("q", "d");
    MatrixXd cz = gk.c("z"), dzp = gk.d("z", "p"), dzd = gk.d("z", "d");
    MatrixXd cy = gk.c("y"), dyp = gk.d("y", "p"), dyd = gk.d("y", "d");

    MatrixXd m(nchi + ns + nz + ny, nchi + np + nw);
    m << psi.a, psi.b_q * cq, psi.b_p + psi.b_q * dqp, psi.b_q, psi.b_q * dqd,
        MatrixXd::Zero(nt, npsi), a_r, bp_r, MatrixXd::Zero(nt, nq), bd_r,
        psi.c, psi.d_q * cq, psi.d_p + psi.d_q * dqp, psi.d_q, psi.d_q * dqd,
        MatrixXd::Zero(nz, npsi), cz, dzp, MatrixXd::Zero(nz, nq), dzd,
        MatrixXd::Zero(ny, npsi), cy, dyp, MatrixXd::Zero(ny, nq), dyd;

    return Interconnection({{"psi", npsi}, {"theta_bar", nt}},
                           {{"p", np}, {"w", nw}},
                           {{"s", ns}, {"z", nz}, {"y", ny}}, std::move(m), rho);
}

Interconnection augment_estimator(const Interconnection& sigma_rho, const Estimator& l,
                                  double rho) {
    require(rho > 0.0 && rho < 1.0, "augment_estimator: rho outside (0,1)");
    const int nchi = sigma_rho.nstate();
    const int npsi = sigma_rho.state_dim("psi");
    const int nt = sigma_rho.state_dim("theta_bar");
    const int np = sigma_rho.input_dim("p"), nw = sigma_rho.input_dim("w");
    const int ns = sigma_rho.output_dim("s"), ny = sigma_rho.output_dim("y");
    const int nlam = l.nlam();
    require(l.b.cols() == ny, "augment_estimator: estimator input dim must equal ny");
    require(l.c.rows() == nt && l.d.rows() == nt,
            "augment_estimator: estimator output dim must equal ntheta");
    require(l.d.cols() == ny, "augment_estimator: estimator D dims");

    const double ri = 1.0 / rho;
    MatrixXd a_s = sigma_rho.a();
    MatrixXd bp = sigma_rho.b("p"), bw = sigma_rho.b("w");
    MatrixXd cs = sigma_rho.c("s"), dsp = sigma_rho.d("s", "p"), dsw = sigma_rho.d("s", "w");
    MatrixXd cy = sigma_rho.c("y"), dyp = sigma_rho.d("y", "p"), dyw = sigma_rho.d("y", "w");
    MatrixXd al_r = ri * l.a, bl_r = ri * l.b;

    // performance output zo = [psi; dtheta_bar - (estimate)_bar]
    MatrixXd sel_psi(npsi, nchi), sel_th(nt, nchi);
    sel_psi << MatrixXd::Identity(npsi, npsi), MatrixXd::Zero(npsi, nt);
    sel_th << MatrixXd::Zero(nt, npsi), MatrixXd::Identity(nt, nt);

    const int nxi = nchi + nlam;
    const int nzo = nchi;
    MatrixXd m(nxi + ns + nzo, nxi + np + nw);
    m << a_s, MatrixXd::Zero(nchi, nlam), bp, bw,
        bl_r * cy, al_r, bl_r * dyp, bl_r * dyw,
        cs, MatrixXd::Zero(ns, nlam), dsp, dsw,
        sel_psi, MatrixXd::Zero(npsi, nlam), MatrixXd::Zero(npsi, np), MatrixXd::Zero(npsi, nw),
        sel_th - l.d * cy, -l.c, -l.d * dyp, -l.d * dyw;

    return Interconnection({{"psi", npsi}, {"dtheta_bar", nt}, {"lam_bar", nlam}},
                           {{"p", np}, {"w", nw}},
                           {{"s", ns}, {"zo", nzo}}, std::move(m), rho);
}

}  // namespace flextube
