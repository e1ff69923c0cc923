#include <random>

#include "analysis/analysis.hpp"
#include "analysis/dare.hpp"
#include "doctest.h"
#include "support/example_system.hpp"

using namespace flextube;

namespace {

std::mt19937_64 rng(4242);

MatrixXd randm(int r, int c) {
    std::normal_distribution<double> d(0.0, 1.0);
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = d(rng);
    return m;
}

// plant with no uncertainty channel: z = x, d drives both states
Plant certain_plant(const MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    Plant g;
    g.a = a;
    g.b_p = MatrixXd::Zero(n, 0);
    g.b_d = MatrixXd::Identity(n, n);
    g.b_u = MatrixXd::Zero(n, 1);
    g.c_q = MatrixXd::Zero(0, n);
    g.d_qp = MatrixXd::Zero(0, 0);
    g.d_qd = MatrixXd::Zero(0, n);
    g.d_qu = MatrixXd::Zero(0, 1);
    g.c_z = MatrixXd::Identity(n, n);
    g.d_zp = MatrixXd::Zero(n, 0);
    g.d_zd = MatrixXd::Zero(n, n);
    g.d_zu = MatrixXd::Zero(n, 1);
    g.c_y = MatrixXd::Identity(n, n);
    g.d_yp = MatrixXd::Zero(n, 0);
    g.d_yd = MatrixXd::Zero(n, n);
    return g;
}

MultiplierClass empty_class() { return norm_bounded_class(1.0, 0, 0, 0); }

}  // namespace

TEST_CASE("dare: doubling solution satisfies the riccati equation") {
    for (int trial = 0; trial < 5; ++trial) {
        int n = 2 + trial, m = 1 + trial % 2;
        MatrixXd a = randm(n, n);
        a *= 0.95 / spectral_radius(a);
        MatrixXd b = randm(n, m);
        SymMatrix q = SymMatrix::identity(n), r = SymMatrix::identity(m);
        SymMatrix x = solve_dare(a, b, q, r);
        MatrixXd gram = r.mat() + b.transpose() * x.mat() * b;
        MatrixXd res = a.transpose() * x.mat() * a - x.mat() -
                       a.transpose() * x.mat() * b * gram.llt().solve(b.transpose() * x.mat() * a) +
                       q.mat();
        CHECK(res.norm() < 1e-9 * (1.0 + x.mat().norm()));
        MatrixXd f = dlqr_gain(a, b, q, r, MatrixXd::Zero(n, m));
        CHECK(spectral_radius(a + b * f) < 1.0);
    }
}

TEST_CASE("analyze: zero system drives gamma to the bracket floor") {
    Plant g = certain_plant(MatrixXd::Zero(2, 2));
    g.c_z = MatrixXd::Zero(2, 2);
    Controller k = Controller::zero(0, 2, 1);
    AnalysisCertificate cert = analyze(close_controller(g, k), empty_class(), 0.85);
    CHECK(cert.gamma <= 2e-4);
    CHECK(cert.mu <= cert.gamma);
}

TEST_CASE("analyze: certificate dominates simulated peaks (no uncertainty)") {
    MatrixXd a = randm(2, 2);
    a *= 0.6 / spectral_radius(a);
    Plant g = certain_plant(a);
    Controller k = Controller::zero(0, 2, 1);
    Interconnection gk = close_controller(g, k);
    AnalysisOptions opts;
    opts.bisect_iters = 24;
    AnalysisCertificate cert = analyze(gk, empty_class(), 0.85, opts);

    // lower-bound oracle: simulated worst peak over random unit-peak d
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        VectorXd x = VectorXd::Zero(2);
        for (int t = 0; t < 40; ++t) {
            VectorXd d(2);
            d << u(rng), u(rng);
            d /= std::max(1.0, d.norm());  // unit peak
            worst = std::max(worst, (g.c_z * x).norm());
            x = a * x + d;
        }
    }
    CHECK(worst <= cert.gamma + 1e-6);
    CHECK(worst >= 0.3 * cert.gamma);  // the bound is not wildly loose
}

TEST_CASE("analyze: paper example with bootstrap controller") {
    Plant g = testing::example_plant_normalized();
    MultiplierClass cls = norm_bounded_class(0.2285, 0);
    Controller k = bootstrap_controller(g, cls, 0.85);
    AnalysisCertificate cert = analyze(close_controller(g, k), cls, 0.85);
    CHECK(cert.gamma < 10.0);
    CHECK(cert.gamma * 0.1 <= 1.0);  // gamma * gamma_d <= 1 for gamma_d = 0.1
    CHECK(cert.mu >= 0.0);
    CHECK(cert.mu <= cert.gamma);
    AnalysisMargins m =
        verify_analysis(augment_filter(close_controller(g, k), cls.filter(), 0.85), cls, cert);
    CHECK(m.pass(1e-7));
    MESSAGE("bootstrap controller gamma = ", cert.gamma);
}

TEST_CASE("analyze: scaling the z rows scales gamma linearly") {
    Plant g = testing::example_plant_normalized();
    MultiplierClass cls = norm_bounded_class(0.2285, 0);
    Controller k = bootstrap_controller(g, cls, 0.85);
    AnalysisOptions opts;
    opts.bisect_iters = 40;
    AnalysisCertificate base = analyze(close_controller(g, k), cls, 0.85, opts);

    const double sigma = 2.7;
    Plant gs = g;
    gs.c_z *= sigma;
    gs.d_zp *= sigma;
    gs.d_zd *= sigma;
    gs.d_zu *= sigma;
    AnalysisCertificate scaled = analyze(close_controller(gs, k), cls, 0.85, opts);
    CHECK(scaled.gamma == doctest::Approx(sigma * base.gamma).epsilon(1e-5));
}

TEST_CASE("analyze_rowwise: row gammas never exceed the full gamma") {
    Plant g = testing::example_plant_normalized();
    MultiplierClass cls = norm_bounded_class(0.2285, 0);
    Controller k = bootstrap_controller(g, cls, 0.85);
    Interconnection gk = close_controller(g, k);
    AnalysisCertificate full = analyze(gk, cls, 0.85);
    RowwiseCertificates rows = analyze_rowwise(gk, cls, {0.85});
    REQUIRE(rows.size() == 6);
    bool strict = false;
    for (const auto& r : rows) {
        CHECK(r.gamma <= full.gamma + 1e-5);
        if (r.gamma < 0.9 * full.gamma) strict = true;
    }
    CHECK(strict);
}

TEST_CASE("analyze_rowwise: duplicate rows give equal gammas") {
    Plant g = testing::example_plant_normalized();
    // duplicate row 0 into row 4 (z3 upper bound slot)
    g.c_z.row(4) = g.c_z.row(0);
    g.d_zp.row(4) = g.d_zp.row(0);
    g.d_zd.row(4) = g.d_zd.row(0);
    g.d_zu.row(4) = g.d_zu.row(0);
    MultiplierClass cls = norm_bounded_class(0.2285, 0);
    Controller k = bootstrap_controller(g, cls, 0.85);
    RowwiseCertificates rows = analyze_rowwise(close_controller(g, k), cls, {0.85});
    CHECK(rows[0].gamma == doctest::Approx(rows[4].gamma).epsilon(1e-9));
}

TEST_CASE("analyze_rowwise: single z row matches plain analyze") {
    MatrixXd a = randm(2, 2);
    a *= 0.6 / spectral_radius(a);
    Plant g = certain_plant(a);
    g.c_z = MatrixXd::Identity(2, 2).topRows(1);
    g.d_zp = MatrixXd::Zero(1, 0);
    g.d_zd = MatrixXd::Zero(1, 2);
    g.d_zu = MatrixXd::Zero(1, 1);
    Controller k = Controller::zero(0, 2, 1);
    Interconnection gk = close_controller(g, k);
    AnalysisCertificate full = analyze(gk, empty_class(), 0.85);
    RowwiseCertificates rows = analyze_rowwise(gk, empty_class(), {0.85});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].gamma == doctest::Approx(full.gamma).epsilon(0.01));
}

TEST_CASE("bootstrap_controller: no-uncertainty plant verifies") {
    MatrixXd a(2, 2);
    a << 1.05, 0.1, 0.0, 0.9;  // unstable, stabilizable
    Plant g = certain_plant(a);
    g.b_u = randm(2, 1);
    Controller k = bootstrap_controller(g, empty_class(), 0.9);
    CHECK(spectral_radius(close_controller(g, k).a()) < 0.9);
}

TEST_CASE("bootstrap_controller: unstabilizable plant is rejected") {
    MatrixXd a(2, 2);
    a << 1.2, 0.0, 0.0, 0.5;
    Plant g = certain_plant(a);
    g.b_u = MatrixXd::Zero(2, 1);  // no control authority on the unstable mode
    CHECK_THROWS_AS(bootstrap_controller(g, empty_class(), 0.9), NoStabilizingController);
}

TEST_CASE("select_output_rows keeps other channels intact") {
    Plant g = testing::example_plant();
    Controller k = Controller::zero(0, 2, 1);
    Interconnection gk = close_controller(g, k);
    Interconnection sub = select_output_rows(gk, "z", {2});
    CHECK(sub.output_dim("z") == 1);
    CHECK((sub.c("z") - gk.c("z").row(2)).norm() == 0.0);
    CHECK((sub.c("q") - gk.c("q")).norm() == 0.0);
    CHECK((sub.c("y") - gk.c("y")).norm() == 0.0);
    CHECK((sub.a() - gk.a()).norm() == 0.0);
}
