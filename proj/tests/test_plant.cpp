#include <random>

#include "doctest.h"
#include "plant/system.hpp"
#include "support/example_system.hpp"

using namespace flextube;

namespace {

std::mt19937_64 rng(777);

MatrixXd randm(int r, int c) {
    std::normal_distribution<double> d(0.0, 1.0);
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = d(rng);
    return m;
}

VectorXd randv(int n) { return randm(n, 1); }

Controller random_controller(int nk, int ny, int nu) {
    Controller k;
    k.a = 0.3 * randm(nk, nk);
    k.b = randm(nk, ny);
    k.c = randm(nu, nk);
    k.d = randm(nu, ny);
    return k;
}

// signal-level oracle for the closed loop: evaluates the combined one-step
// map directly from the plant and controller equations, without any block
// formula
void oracle_step(const Plant& g, const Controller& k, const VectorXd& x, const VectorXd& kx,
                 const VectorXd& p, const VectorXd& d, const VectorXd& umpc, VectorXd& x_next,
                 VectorXd& kx_next, VectorXd& q, VectorXd& z, VectorXd& y) {
    y = g.c_y * x + g.d_yp * p + g.d_yd * d;
    VectorXd u = k.c * kx + k.d * y + umpc;
    x_next = g.a * x + g.b_p * p + g.b_d * d + g.b_u * u;
    kx_next = k.a * kx + k.b * y;
    q = g.c_q * x + g.d_qp * p + g.d_qd * d + g.d_qu * u;
    z = g.c_z * x + g.d_zp * p + g.d_zd * d + g.d_zu * u;
}

Filter passthrough_filter(int nq, int np) {
    // stateless s = [q_bar; p_bar]
    Filter f;
    f.a = MatrixXd::Zero(0, 0);
    f.b_q = MatrixXd::Zero(0, nq);
    f.b_p = MatrixXd::Zero(0, np);
    f.c = MatrixXd::Zero(nq + np, 0);
    f.d_q = MatrixXd::Zero(nq + np, nq);
    f.d_q.topRows(nq).setIdentity();
    f.d_p = MatrixXd::Zero(nq + np, np);
    f.d_p.bottomRows(np).setIdentity();
    return f;
}

Filter random_filter(int npsi, int nq, int np, int ns) {
    Filter f;
    f.a = 0.4 * randm(npsi, npsi);
    f.b_q = randm(npsi, nq);
    f.b_p = randm(npsi, np);
    f.c = randm(ns, npsi);
    f.d_q = randm(ns, nq);
    f.d_p = randm(ns, np);
    return f;
}

}  // namespace

TEST_CASE("close_controller: decoupled controller gives block-diagonal A") {
    Plant g = testing::example_plant();
    Controller k = Controller::zero(2, g.ny(), g.nu());
    k.a = 0.5 * MatrixXd::Identity(2, 2);
    Interconnection gk = close_controller(g, k);
    MatrixXd a_expect = MatrixXd::Zero(4, 4);
    a_expect.topLeftCorner(2, 2) = g.a;
    a_expect.bottomRightCorner(2, 2) = k.a;
    CHECK((gk.a() - a_expect).norm() < 1e-14);
    MatrixXd cq_expect(1, 4);
    cq_expect << g.c_q, MatrixXd::Zero(1, 2);
    CHECK((gk.c("q") - cq_expect).norm() < 1e-14);
}

TEST_CASE("close_controller: static controller reduces to state feedback form") {
    Plant g = testing::example_plant();
    Controller k = Controller::zero(0, g.ny(), g.nu());
    k.d = randm(1, 2);
    Interconnection gk = close_controller(g, k);
    CHECK((gk.a() - (g.a + g.b_u * k.d * g.c_y)).norm() < 1e-14);
    CHECK(gk.nstate() == 2);
}

TEST_CASE("close_controller: blocks match the signal-level oracle") {
    Plant g = testing::example_plant();
    Controller k = random_controller(3, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);

    // probe every column of the combined map with unit vectors
    const int nt = 5, np = 1, nd = 1, nu = 1;
    for (int col = 0; col < nt + np + nd + nu; ++col) {
        VectorXd probe = VectorXd::Zero(nt + np + nd + nu);
        probe(col) = 1.0;
        VectorXd x = probe.segment(0, 2), kx = probe.segment(2, 3);
        VectorXd p = probe.segment(5, 1), d = probe.segment(6, 1), umpc = probe.segment(7, 1);
        VectorXd xn, kxn, q, z, y;
        oracle_step(g, k, x, kx, p, d, umpc, xn, kxn, q, z, y);

        VectorXd theta(nt);
        theta << x, kx;
        auto [next, outs] = gk.step(theta, {{"p", p}, {"d", d}, {"u", umpc}});
        VectorXd expect_next(nt);
        expect_next << xn, kxn;
        CHECK((next - expect_next).norm() < 1e-13);
        CHECK((outs.at("q") - q).norm() < 1e-13);
        CHECK((outs.at("z") - z).norm() < 1e-13);
        CHECK((outs.at("y") - y).norm() < 1e-13);
    }
}

TEST_CASE("interconnection associativity: joint closed loop equals separate wiring") {
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);

    VectorXd x = randv(2), kx = randv(2);
    VectorXd theta(4);
    theta << x, kx;
    for (int t = 0; t < 100; ++t) {
        VectorXd p = randv(1), d = randv(1), umpc = randv(1);
        VectorXd xn, kxn, q, z, y;
        oracle_step(g, k, x, kx, p, d, umpc, xn, kxn, q, z, y);
        auto [next, outs] = gk.step(theta, {{"p", p}, {"d", d}, {"u", umpc}});
        VectorXd expect(4);
        expect << xn, kxn;
        REQUIRE((next - expect).norm() < 1e-12 * (1.0 + expect.norm()));
        x = xn;
        kx = kxn;
        theta = next;
    }
}

TEST_CASE("step: zero and identity basics") {
    Plant g = testing::example_plant();
    Controller k = Controller::zero(0, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);
    auto [next, outs] = gk.step(VectorXd::Zero(2), {});
    CHECK(next.norm() == 0.0);
    CHECK(outs.at("q").norm() == 0.0);
    CHECK(outs.at("z").norm() == 0.0);
}

TEST_CASE("step: 20-step autonomous rollout matches modal closed form") {
    Plant g = testing::example_plant();
    Controller k = Controller::zero(0, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);

    Eigen::EigenSolver<MatrixXd> es(g.a);
    Eigen::MatrixXcd v = es.eigenvectors();
    Eigen::VectorXcd lam = es.eigenvalues();
    VectorXd x0(2);
    x0 << 1.0, -0.5;
    Eigen::VectorXcd c0 = v.fullPivLu().solve(x0.cast<std::complex<double>>());

    VectorXd x = x0;
    for (int t = 1; t <= 20; ++t) {
        x = gk.step(x, {}).first;
        Eigen::VectorXcd xt = v * (lam.array().pow(t) * c0.array()).matrix();
        CHECK((x - xt.real()).norm() < 1e-10);
    }
}

TEST_CASE("augment_filter: stateless passthrough filter") {
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);
    Filter f = passthrough_filter(1, 1);
    Interconnection sig = augment_filter(gk, f, 0.85);

    CHECK(sig.nstate() == 4);  // theta_bar only
    // s = [q_bar; p_bar] rows: first row reproduces scaled q rows of GK
    MatrixXd cs = sig.c("s");
    CHECK((cs.row(0) - gk.c("q")).norm() < 1e-14);
    CHECK(cs.row(1).norm() < 1e-14);
    MatrixXd dsp = sig.d("s", "p");
    CHECK(dsp(0, 0) == doctest::Approx(gk.d("q", "p")(0, 0)));
    CHECK(dsp(1, 0) == doctest::Approx(1.0));
    // q-part of w enters s directly
    MatrixXd dsw = sig.d("s", "w");
    CHECK(dsw(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("augment_filter: zero plant leaves only filter rows") {
    Plant g;
    g.a = MatrixXd::Zero(2, 2);
    g.b_p = MatrixXd::Zero(2, 1);
    g.b_d = MatrixXd::Zero(2, 1);
    g.b_u = MatrixXd::Zero(2, 1);
    g.c_q = MatrixXd::Zero(1, 2);
    g.d_qp = MatrixXd::Zero(1, 1);
    g.d_qd = MatrixXd::Zero(1, 1);
    g.d_qu = MatrixXd::Zero(1, 1);
    g.c_z = MatrixXd::Zero(1, 2);
    g.d_zp = MatrixXd::Zero(1, 1);
    g.d_zd = MatrixXd::Zero(1, 1);
    g.d_zu = MatrixXd::Zero(1, 1);
    g.c_y = MatrixXd::Zero(1, 2);
    g.d_yp = MatrixXd::Zero(1, 1);
    g.d_yd = MatrixXd::Zero(1, 1);
    Controller k = Controller::zero(0, 1, 1);
    Filter f = random_filter(2, 1, 1, 2);
    Interconnection sig = augment_filter(close_controller(g, k), f, 0.9);
    MatrixXd a = sig.a();
    CHECK((a.topLeftCorner(2, 2) - f.a).norm() < 1e-14);
    CHECK(a.bottomRows(2).norm() == 0.0);
    CHECK((sig.b("p").topRows(2) - f.b_p).norm() < 1e-14);
}

TEST_CASE("augment_filter: rho-scaling identity against unscaled cascade") {
    // Sigma_rho driven by rho^{-k}-scaled inputs reproduces rho^{-k} times
    // the signals of the unscaled error loop + filter cascade.
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);
    Filter f = random_filter(2, 1, 1, 3);
    const double rho = 0.85;
    Interconnection sig = augment_filter(gk, f, rho);

    // ground truth: unscaled error dynamics dtheta+ = A dth + Bp p + Bd d,
    // filter driven by (rho^{-k} q, rho^{-k} p) with q = q_nom + dq
    VectorXd dtheta = VectorXd::Zero(4), psi = VectorXd::Zero(2);
    VectorXd chi = VectorXd::Zero(6);  // [psi; theta_bar]
    std::vector<VectorXd> ps, ds, qnoms;
    for (int t = 0; t < 50; ++t) {
        ps.push_back(0.3 * randv(1));
        ds.push_back(0.3 * randv(1));
        qnoms.push_back(0.3 * randv(1));
    }
    for (int t = 0; t < 50; ++t) {
        const double sc = std::pow(rho, -t);
        // scaled system step
        VectorXd w(2);
        w << qnoms[t], ds[t];
        auto [chi_n, outs] = sig.step(chi, {{"p", (sc * ps[t]).eval()}, {"w", (sc * w).eval()}});

        // unscaled ground truth
        VectorXd dq = gk.c("q") * dtheta + gk.d("q", "p") * ps[t] + gk.d("q", "d") * ds[t];
        VectorXd dz = gk.c("z") * dtheta + gk.d("z", "p") * ps[t] + gk.d("z", "d") * ds[t];
        VectorXd q_total = qnoms[t] + dq;
        VectorXd qbar = sc * q_total, pbar = sc * ps[t];
        VectorXd s_expect = f.c * psi + f.d_q * qbar + f.d_p * pbar;
        REQUIRE((outs.at("s") - s_expect).norm() < 1e-9 * (1.0 + s_expect.norm()));
        REQUIRE((outs.at("z") - sc * dz).norm() < 1e-9 * (1.0 + sc * dz.norm()));

        psi = f.a * psi + f.b_q * qbar + f.b_p * pbar;
        dtheta = gk.a() * dtheta + gk.b("p") * ps[t] + gk.b("d") * ds[t];
        chi = chi_n;
        REQUIRE((chi.head(2) - psi).norm() < 1e-9 * (1.0 + psi.norm()));
        REQUIRE((chi.tail(4) - std::pow(rho, -(t + 1)) * dtheta).norm() < 1e-9 * (1.0 + std::pow(rho, -(t + 1)) * dtheta.norm()));
    }
}

TEST_CASE("augment_estimator: zero estimator removes the correction term") {
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Interconnection sig = augment_filter(close_controller(g, k), passthrough_filter(1, 1), 0.85);
    Estimator l = Estimator::zero(3, g.ny(), 4);
    Interconnection xi = augment_estimator(sig, l, 0.85);
    MatrixXd czo = xi.c("zo");
    // zo = [psi-part (empty here); dtheta_bar] with no correction
    CHECK((czo.leftCols(4) - MatrixXd::Identity(4, 4)).norm() < 1e-14);
    CHECK(czo.rightCols(3).norm() == 0.0);
    CHECK(xi.d("zo", "p").norm() == 0.0);
}

TEST_CASE("augment_estimator: identity C_L reduction") {
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Interconnection sig = augment_filter(close_controller(g, k), passthrough_filter(1, 1), 0.85);
    Estimator l = Estimator::zero(4, g.ny(), 4);
    l.c = MatrixXd::Identity(4, 4);
    Interconnection xi = augment_estimator(sig, l, 0.85);
    MatrixXd czo = xi.c("zo");
    // second block of zo = dtheta_bar - lam_bar
    CHECK((czo.leftCols(4) - MatrixXd::Identity(4, 4)).norm() < 1e-14);
    CHECK((czo.rightCols(4) + MatrixXd::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("augment_estimator: matches independently assembled blocks") {
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Filter f = random_filter(2, 1, 1, 3);
    const double rho = 0.9;
    Interconnection sig = augment_filter(close_controller(g, k), f, rho);
    Estimator l;
    const int nt = 4, nlam = 5, ny = 2;
    l.a = randm(nlam, nlam);
    l.b = randm(nlam, ny);
    l.c = randm(nt, nlam);
    l.d = randm(nt, ny);
    Interconnection xi = augment_estimator(sig, l, rho);

    // dual assembly straight from the partition description
    const int nchi = 6, npsi = 2;
    MatrixXd a_expect = MatrixXd::Zero(nchi + nlam, nchi + nlam);
    a_expect.topLeftCorner(nchi, nchi) = sig.a();
    a_expect.block(nchi, 0, nlam, nchi) = (1.0 / rho) * l.b * sig.c("y");
    a_expect.block(nchi, nchi, nlam, nlam) = (1.0 / rho) * l.a;
    CHECK((xi.a() - a_expect).norm() < 1e-12);

    MatrixXd bp_expect(nchi + nlam, 1);
    bp_expect << sig.b("p"), (1.0 / rho) * l.b * sig.d("y", "p");
    CHECK((xi.b("p") - bp_expect).norm() < 1e-12);

    MatrixXd czo_expect = MatrixXd::Zero(nchi, nchi + nlam);
    czo_expect.topLeftCorner(npsi, npsi).setIdentity();
    czo_expect.block(npsi, npsi, nt, nt).setIdentity();
    czo_expect.block(npsi, 0, nt, nchi) -= l.d * sig.c("y");
    czo_expect.block(npsi, nchi, nt, nlam) = -l.c;
    CHECK((xi.c("zo") - czo_expect).norm() < 1e-12);

    MatrixXd dzop_expect = MatrixXd::Zero(nchi, 1);
    dzop_expect.bottomRows(nt) = -l.d * sig.d("y", "p");
    CHECK((xi.d("zo", "p") - dzop_expect).norm() < 1e-12);

    MatrixXd dzow_expect = MatrixXd::Zero(nchi, 2);
    dzow_expect.bottomRows(nt) = -l.d * sig.d("y", "w");
    CHECK((xi.d("zo", "w") - dzow_expect).norm() < 1e-12);
}

TEST_CASE("augment_estimator: output identity against separately simulated estimator") {
    Plant g = testing::example_plant();
    Controller k = random_controller(2, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);
    Filter f = random_filter(2, 1, 1, 3);
    const double rho = 0.85;
    Interconnection sig = augment_filter(gk, f, rho);
    Estimator l;
    const int nt = 4, ny = 2;
    l.a = 0.3 * randm(3, 3);
    l.b = randm(3, ny);
    l.c = randm(nt, 3);
    l.d = randm(nt, ny);
    Interconnection xi = augment_estimator(sig, l, rho);

    VectorXd xi_state = VectorXd::Zero(xi.nstate());
    VectorXd dtheta = VectorXd::Zero(nt), psi = VectorXd::Zero(2), lam = VectorXd::Zero(3);
    for (int t = 0; t < 60; ++t) {
        const double sc = std::pow(rho, -t);
        VectorXd p = 0.3 * randv(1), d = 0.3 * randv(1), qnom = 0.3 * randv(1);
        VectorXd w(2);
        w << qnom, d;
        auto [xi_next, outs] = xi.step(xi_state, {{"p", (sc * p).eval()}, {"w", (sc * w).eval()}});

        // ground truth: error dynamics, filter, and estimator run unscaled
        VectorXd dy = gk.c("y") * dtheta + gk.d("y", "p") * p + gk.d("y", "d") * d;
        VectorXd est = l.c * lam + l.d * dy;  // estimate of dtheta
        VectorXd zo_expect(6);
        zo_expect << psi, sc * (dtheta - est);
        REQUIRE((outs.at("zo") - zo_expect).norm() < 1e-9 * (1.0 + zo_expect.norm()));

        VectorXd dq = gk.c("q") * dtheta + gk.d("q", "p") * p + gk.d("q", "d") * d;
        VectorXd qbar = sc * (qnom + dq), pbar = sc * p;
        psi = f.a * psi + f.b_q * qbar + f.b_p * pbar;
        dtheta = gk.a() * dtheta + gk.b("p") * p + gk.b("d") * d;
        lam = l.a * lam + l.b * dy;
        xi_state = xi_next;
    }
}

TEST_CASE("augment_filter rejects rho outside (0,1)") {
    Plant g = testing::example_plant();
    Controller k = Controller::zero(0, g.ny(), g.nu());
    Interconnection gk = close_controller(g, k);
    Filter f = passthrough_filter(1, 1);
    CHECK_THROWS_AS(augment_filter(gk, f, 1.0), DimensionError);
    CHECK_THROWS_AS(augment_filter(gk, f, 0.0), DimensionError);
}
