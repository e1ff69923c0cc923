#pragma once

#include <map>
#include <string>
#include <vector>

#include "numerics/dense.hpp"

namespace flextube {

// Discrete-time plant with uncertainty channel (p -> q), disturbance d,
// control u, constraint output z, and measurement y. There is structurally
// no u-feedthrough to y; the estimator design requires y_t independent of u_t.
struct Plant {
    MatrixXd a;
    MatrixXd b_p, b_d, b_u;
    MatrixXd c_q, d_qp, d_qd, d_qu;
    MatrixXd c_z, d_zp, d_zd, d_zu;
    MatrixXd c_y, d_yp, d_yd;

    int nx() const { return static_cast<int>(a.rows()); }
    int np() const { return static_cast<int>(b_p.cols()); }
    int nd() const { return static_cast<int>(b_d.cols()); }
    int nu() const { return static_cast<int>(b_u.cols()); }
    int nq() const { return static_cast<int>(c_q.rows()); }
    int nz() const { return static_cast<int>(c_z.rows()); }
    int ny() const { return static_cast<int>(c_y.rows()); }

    void validate() const;
};

// Dynamic output-feedback controller u = C k + D y + u_mpc.
struct Controller {
    MatrixXd a, b, c, d;
    int nk() const { return static_cast<int>(a.rows()); }
    static Controller zero(int nk, int ny, int nu);
};

// IQC filter driven by the loop-transformed channel signals.
struct Filter {
    MatrixXd a;
    MatrixXd b_q, b_p;
    MatrixXd c;
    MatrixXd d_q, d_p;
    int npsi() const { return static_cast<int>(a.rows()); }
    int ns() const { return static_cast<int>(c.rows()); }
};

// Estimator for the deviation of the combined [x; k] state from its
// nominal trajectory.
struct Estimator {
    MatrixXd a, b, c, d;
    int nlam() const { return static_cast<int>(a.rows()); }
    static Estimator zero(int nlam, int ny, int ntheta);
};

// Partitioned state-space map with named state partitions and named
// input/output channels. Block labels, not offsets, are the interface;
// the interconnection formulas are block formulas and label errors are
// the dominant bug class.
class Interconnection {
public:
    struct Part {
        std::string name;
        int dim;
    };

    Interconnection(std::vector<Part> states, std::vector<Part> inputs, std::vector<Part> outputs,
                    MatrixXd m, double rho = 1.0);

    int nstate() const { return nstate_; }
    double rho() const { return rho_; }

    int input_dim(const std::string& name) const { return find(inputs_, name).dim; }
    int output_dim(const std::string& name) const { return find(outputs_, name).dim; }
    int state_dim(const std::string& name) const { return find(states_, name).dim; }
    int state_offset(const std::string& name) const;

    MatrixXd a() const;
    MatrixXd b(const std::string& input) const;
    MatrixXd c(const std::string& output) const;
    MatrixXd d(const std::string& output, const std::string& input) const;

    // exact affine update; outputs keyed by channel name
    std::pair<VectorXd, std::map<std::string, VectorXd>> step(
        const VectorXd& state, const std::map<std::string, VectorXd>& inputs) const;

    const MatrixXd& full_matrix() const { return m_; }
    const std::vector<Part>& states() const { return states_; }
    const std::vector<Part>& inputs() const { return inputs_; }
    const std::vector<Part>& outputs() const { return outputs_; }

private:
    static const Part& find(const std::vector<Part>& parts, const std::string& name);
    int input_offset(const std::string& name) const;
    int output_offset(const std::string& name) const;

    std::vector<Part> states_, inputs_, outputs_;
    MatrixXd m_;
    int nstate_ = 0, nin_ = 0, nout_ = 0;
    double rho_ = 1.0;
};

// Closed loop of plant and controller; state [x; k], inputs (p, d, u_mpc),
// outputs (q, z, y).
Interconnection close_controller(const Plant& g, const Controller& k);

// rho-scaled filter-augmented error loop; state [psi; theta_bar], inputs
// (p_bar, w_bar) with w = [q_nom; d], outputs (s, z_bar, y_bar).
Interconnection augment_filter(const Interconnection& gk, const Filter& psi, double rho);

// rho-scaled estimator-augmented loop; state [psi; dtheta_bar; lam_bar],
// inputs (p_bar, w_bar), outputs (s, zo_bar).
Interconnection augment_estimator(const Interconnection& sigma_rho, const Estimator& l, double rho);

}  // namespace flextube
