/** @file state_solver.hpp
    @brief Generalized-alpha time stepping with a fixed-point iteration on the acceleration.
*/
#pragma once

#include "lensopt/assembly.hpp"

#include <Eigen/SparseLU>
#include <functional>
#include <memory>

namespace lensopt {

struct TimeGrid {
    double T_final = 90e-6;
    int n_steps = 3801; ///< number of time levels including t = 0

    double dt() const { return T_final / (n_steps - 1); }
    double t(int n) const { return n * dt(); }
    void validate() const;
    bool operator==(const TimeGrid& o) const { return T_final == o.T_final && n_steps == o.n_steps; }
};

struct AlphaParams {
    double alpha_m = 0.5;
    double alpha_f = 1.0 / 3.0;
    double beta = 0.45;
    double gamma = 0.75;

    static AlphaParams newmark() { return {0.0, 0.0, 0.25, 0.5}; }
    void validate() const;
};

/// Coefficient histories, one column per time level.
struct TimeSeriesField {
    TimeGrid grid;
    Eigen::MatrixXd value, rate, accel;

    int n_dofs() const { return static_cast<int>(value.rows()); }
    int n_steps() const { return static_cast<int>(value.cols()); }
    static TimeSeriesField zeros(int n, const TimeGrid& grid);
};

/// Sparse LU of an effective matrix, computed once.
class FactorizedMatrix {
public:
    explicit FactorizedMatrix(const SpMat& A);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    const SpMat& matrix() const { return A_; }

private:
    SpMat A_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

/// (1-am) M + gamma (1-af) dt C + beta (1-af) dt^2 K.
SpMat effective_mass_matrix(const SpMat& M, const SpMat& C, const SpMat& K, const AlphaParams& ap, double dt);
std::shared_ptr<FactorizedMatrix> effective_mass(const SpMat& M, const SpMat& C, const SpMat& K,
                                                 const AlphaParams& ap, double dt);

struct StateOptions {
    double tol_u = 1e-6;
    int max_iter = 50;
    std::function<void(int step, const Eigen::VectorXd& u)> on_step;
};

/// One time step of the scheme; usable on its own for small model problems.
class GenAlphaStepper {
public:
    GenAlphaStepper(const AssembledSystem& sys, double dt, const AlphaParams& ap, const StateOptions& opts = {});

    /// Solves M a0 = F(t0) - C v0 - K u0.
    Eigen::VectorXd initial_acceleration(double t0, const Eigen::VectorXd& u0, const Eigen::VectorXd& v0) const;

    /// Advances (u, v, a) from t_n to t_n + dt; returns the number of inner iterations.
    int step(double t_n, const Eigen::VectorXd& u_n, const Eigen::VectorXd& v_n, const Eigen::VectorXd& a_n,
             Eigen::VectorXd& u, Eigen::VectorXd& v, Eigen::VectorXd& a, int step_index = -1) const;

    double dt() const { return dt_; }

private:
    const AssembledSystem& sys_;
    double dt_;
    AlphaParams ap_;
    StateOptions opts_;
    std::shared_ptr<FactorizedMatrix> mbar_;
    bool has_absorbing_;
};

struct StateResult {
    TimeSeriesField field;
    std::vector<int> iterations; ///< per step, entry 0 unused
    double mean_iterations() const;
    int max_iterations() const;
};

StateResult solve_state(const AssembledSystem& sys, const TimeGrid& grid, const AlphaParams& ap,
                        const StateOptions& opts = {});

} // namespace lensopt
