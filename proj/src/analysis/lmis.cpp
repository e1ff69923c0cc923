#include "analysis/lmis.hpp"

namespace flextube {

namespace {

LoopStacks build(const Interconnection& ic, const std::string& perf_name) {
    LoopStacks st;
    st.nstate = ic.nstate();
    st.npsi = ic.state_dim("psi");
    st.np = ic.input_dim("p");
    st.nw = ic.input_dim("w");
    st.ns = ic.output_dim("s");
    st.nperf = ic.output_dim(perf_name);
    const int nv = st.nstate + st.np + st.nw;
    st.t_state.setZero(st.nstate, nv);
    st.t_state.leftCols(st.nstate).setIdentity();
    st.t_next.resize(st.nstate, nv);
    st.t_next << ic.a(), ic.b("p"), ic.b("w");
    st.t_s.resize(st.ns, nv);
    st.t_s << ic.c("s"), ic.d("s", "p"), ic.d("s", "w");
    st.t_perf.resize(st.nperf, nv);
    st.t_perf << ic.c(perf_name), ic.d(perf_name, "p"), ic.d(perf_name, "w");
    st.t_w.setZero(st.nw, nv);
    st.t_w.rightCols(st.nw).setIdentity();
    return st;
}

}  // namespace

LoopStacks LoopStacks::analysis(const Interconnection& sigma_rho) { return build(sigma_rho, "z"); }

LoopStacks LoopStacks::estimation(const Interconnection& xi_rho) { return build(xi_rho, "zo"); }

AffineMat scalar_times(const AffineScalar& s, const MatrixXd& m) {
    AffineMat e = AffineMat::constant(s.c0() * m);
    for (const auto& [v, c] : s.terms()) e.add_term(v, c * m);
    return e;
}

AffineMat pad_state_block(const AffineMat& x, int nstate) {
    return x.embed(nstate, nstate, 0, 0);
}

AffineMat stability_lmi(const LoopStacks& st, const AffineMat& p, const AffineMat& m,
                        const AffineScalar& mu) {
    AffineMat f = p.congruence(st.t_next) - p.congruence(st.t_state);
    if (st.ns > 0) f = f + m.congruence(st.t_s);
    return f - scalar_times(mu, st.t_w.transpose() * st.t_w);
}

AffineMat performance_lmi(const LoopStacks& st, const AffineMat& p, const AffineMat& x1_pad,
                          const AffineMat& x2_pad, const AffineMat& m2,
                          const AffineMat& perf_weight, const AffineScalar& beta) {
    AffineMat f = (x1_pad - p).congruence(st.t_state) + x2_pad.congruence(st.t_next) +
                  perf_weight.congruence(st.t_perf);
    if (st.ns > 0) f = f + m2.congruence(st.t_s);
    return f - scalar_times(beta, st.t_w.transpose() * st.t_w);
}

AffineMat coupling_lmi(const AffineMat& p, const AffineMat& x1_pad, const AffineMat& x2_pad) {
    return p - x1_pad - x2_pad;
}

MultiplierVars add_multiplier(ConicProgram& prog, const MultiplierClass& cls) {
    MultiplierVars mv;
    const int ns = cls.filter().ns(), npsi = cls.filter().npsi();
    mv.m = AffineMat(ns, ns);
    mv.x = AffineMat(npsi, npsi);
    mv.coeff_sum = AffineScalar(0.0);
    for (const auto& b : cls.basis()) {
        int c = prog.scalar_nonneg();
        mv.coeffs.push_back(c);
        mv.m.add_term(c, b.m.mat());
        mv.x.add_term(c, b.x.mat());
        mv.coeff_sum = mv.coeff_sum + prog.expr(c);
    }
    return mv;
}

}  // namespace flextube
