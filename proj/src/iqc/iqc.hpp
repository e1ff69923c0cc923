#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "numerics/dense.hpp"
#include "plant/system.hpp"

namespace flextube {

struct MultiplierPair {
    SymMatrix m;  // on the filter output s
    SymMatrix x;  // terminal cost on the filter state
};

struct ViolationFound : std::runtime_error {
    ViolationFound(const std::string& what, int trial_, int time_, double value_, MatrixXd traj)
        : std::runtime_error(what), trial(trial_), time(time_), value(value_),
          trajectory(std::move(traj)) {}
    int trial;
    int time;
    double value;
    MatrixXd trajectory;  // offending scaled input, one column per step
};

// Linearly parameterized admissible multiplier set: every nonnegative
// combination of the basis pairs must satisfy the hard IQC for the declared
// uncertainty class. Validity is enforced empirically by validate_hard_iqc
// rather than assumed.
class MultiplierClass {
public:
    MultiplierClass(Filter filter, std::vector<MultiplierPair> basis, double bound, int nq, int np);

    const Filter& filter() const { return filter_; }
    const std::vector<MultiplierPair>& basis() const { return basis_; }
    int size() const { return static_cast<int>(basis_.size()); }
    double bound() const { return bound_; }
    int nq() const { return nq_; }
    int np() const { return np_; }

    MultiplierPair combine(const VectorXd& coeffs) const;

private:
    Filter filter_;
    std::vector<MultiplierPair> basis_;
    double bound_;
    int nq_, np_;
};

// Norm-bounded uncertainty class ||Delta_rho|| <= b. Order 0 is the static
// multiplier on s = [q_bar; p_bar]; order >= 1 appends first-order filtered
// copies of both channels (pole a), one basis pair per section.
MultiplierClass norm_bounded_class(double b, int filter_order, int nq = 1, int np = 1,
                                   double pole = 0.5);

// Feasibility of the discrete-time bounded-real LMI at gain level g.
bool bounded_real_feasible(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c,
                           const MatrixXd& d, double gain);

// l2-induced gain upper bound by bisection on the bounded-real LMI.
double lti_gain_upper(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c, const MatrixXd& d,
                      double tol = 1e-6);

class UncertaintyRealization {
public:
    enum class Kind { Zero, StaticGain, Lti };

    static UncertaintyRealization zero(int np, int nq);
    static UncertaintyRealization static_gain(const MatrixXd& g, double bound);
    // certifies ||Delta_rho|| <= bound for rho over [rho_min, 1] at
    // `samples` points via the bounded-real LMI
    static UncertaintyRealization lti(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c,
                                      const MatrixXd& d, double bound, double rho_min,
                                      int samples = 12);

    Kind kind() const { return kind_; }
    double bound() const { return bound_; }
    int np() const { return np_; }
    int nq() const { return nq_; }
    int nstates() const { return static_cast<int>(a_.rows()); }
    const MatrixXd& a() const { return a_; }
    const MatrixXd& b() const { return b_; }
    const MatrixXd& c() const { return c_; }
    const MatrixXd& d() const { return d_; }

    // causal stateful operator computing p_bar = Delta_rho(q_bar); for LTI
    // realizations this is the (rho^{-1}A, rho^{-1}B, C, D) system
    class Op {
    public:
        Op(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d);
        VectorXd step(const VectorXd& q);
        void reset() { state_.setZero(); }
        const VectorXd& state() const { return state_; }
        void set_state(const VectorXd& s) { state_ = s; }

    private:
        MatrixXd a_, b_, c_, d_;
        VectorXd state_;
    };

    Op loop_transformed(double rho) const;

    // worst-case finite-horizon input of the scaled operator (power
    // iteration on the convolution map); columns are time steps
    MatrixXd peak_gain_input(double rho, int horizon, std::mt19937_64& rng, int iters = 25) const;

private:
    UncertaintyRealization() = default;
    Kind kind_ = Kind::Zero;
    double bound_ = 0.0;
    int np_ = 0, nq_ = 0;
    MatrixXd a_, b_, c_, d_;  // static gain stored in d_
};

// random stable LTI realization scaled so that max over the rho grid of
// ||Delta_rho|| equals `target_gain` (certified at `bound`)
UncertaintyRealization random_certified_lti(int np, int nq, int nstates, double target_gain,
                                            double bound, double rho_min, std::mt19937_64& rng);

struct HardIqcReport {
    double min_accumulated = 0.0;
    int trials = 0;
    int horizon = 0;
    bool passed = false;
};

// Drives random and adversarial q_bar through Delta_rho, runs the filter
// from zero state, and asserts the accumulated IQC value at every horizon.
HardIqcReport validate_hard_iqc(const MultiplierClass& cls, const MultiplierPair& pair,
                                const UncertaintyRealization& delta, double rho, int horizon,
                                int trials, uint64_t seed, double tol = 1e-8,
                                bool throw_on_violation = true);

}  // namespace flextube
