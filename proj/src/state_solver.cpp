#include "lensopt/state_solver.hpp"
#include "lensopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lensopt {

void TimeGrid::validate() const
{
    if (n_steps < 2)
        throw ConfigError("time grid needs at least 2 levels (n_steps >= 2)");
    if (!(T_final > 0.0) || !std::isfinite(T_final))
        throw ConfigError("final time must be positive");
}

void AlphaParams::validate() const
{
    if (!(beta > 0.0))
        throw ConfigError("beta must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("gamma must lie in (0, 1]");
    if (!(alpha_m < 1.0 && alpha_f < 1.0))
        throw ConfigError("alpha_m and alpha_f must be below 1");
}

TimeSeriesField TimeSeriesField::zeros(int n, const TimeGrid& grid)
{
    TimeSeriesField f;
    f.grid = grid;
    f.value = Eigen::MatrixXd::Zero(n, grid.n_steps);
    f.rate = Eigen::MatrixXd::Zero(n, grid.n_steps);
    f.accel = Eigen::MatrixXd::Zero(n, grid.n_steps);
    return f;
}

FactorizedMatrix::FactorizedMatrix(const SpMat& A) : A_(A)
{
    Eigen::SparseMatrix<double> Ac(A);
    Ac.makeCompressed();
    lu_.analyzePattern(Ac);
    lu_.factorize(Ac);
    if (lu_.info() != Eigen::Success)
        throw FactorizationError("sparse LU factorization failed: " + lu_.lastErrorMessage());
}

Eigen::VectorXd FactorizedMatrix::solve(const Eigen::VectorXd& rhs) const
{
    Eigen::VectorXd x = lu_.solve(rhs);
    return x;
}

SpMat effective_mass_matrix(const SpMat& M, const SpMat& C, const SpMat& K, const AlphaParams& ap, double dt)
{
    SpMat A = (1.0 - ap.alpha_m) * M + (ap.gamma * (1.0 - ap.alpha_f) * dt) * C +
              (ap.beta * (1.0 - ap.alpha_f) * dt * dt) * K;
    A.makeCompressed();
    return A;
}

std::shared_ptr<FactorizedMatrix> effective_mass(const SpMat& M, const SpMat& C, const SpMat& K,
                                                 const AlphaParams& ap, double dt)
{
    return std::make_shared<FactorizedMatrix>(effective_mass_matrix(M, C, K, ap, dt));
}

GenAlphaStepper::GenAlphaStepper(const AssembledSystem& sys, double dt, const AlphaParams& ap,
                                 const StateOptions& opts)
    : sys_(sys), dt_(dt), ap_(ap), opts_(opts)
{
    ap_.validate();
    sys_.validate();
    if (!(dt > 0.0))
        throw ConfigError("time step must be positive");
    has_absorbing_ = sys.A1.nonZeros() > 0 || sys.A2.nonZeros() > 0;
    SpMat A = effective_mass_matrix(sys.M, sys.C, sys.K, ap_, dt_);
    if (has_absorbing_)
        A += (ap_.gamma * (1.0 - ap_.alpha_f) * dt_) * sys.A1 + (1.0 - ap_.alpha_m) * sys.A2;
    mbar_ = std::make_shared<FactorizedMatrix>(A);
}

Eigen::VectorXd GenAlphaStepper::initial_acceleration(double t0, const Eigen::VectorXd& u0,
                                                      const Eigen::VectorXd& v0) const
{
    Eigen::VectorXd rhs = sys_.load_at(t0) - sys_.C * v0 - sys_.K * u0;
    if (rhs.norm() == 0.0)
        return Eigen::VectorXd::Zero(sys_.n);
    FactorizedMatrix Mf(sys_.M);
    return Mf.solve(rhs);
}

int GenAlphaStepper::step(double t_n, const Eigen::VectorXd& u_n, const Eigen::VectorXd& v_n,
                          const Eigen::VectorXd& a_n, Eigen::VectorXd& u, Eigen::VectorXd& v, Eigen::VectorXd& a,
                          int step_index) const
{
    const double dt = dt_, am = ap_.alpha_m, af = ap_.alpha_f, beta = ap_.beta, gamma = ap_.gamma;
    const Eigen::VectorXd u_pred = u_n + dt * v_n + (0.5 * dt * dt * (1.0 - 2.0 * beta)) * a_n;
    const Eigen::VectorXd v_pred = v_n + ((1.0 - gamma) * dt) * a_n;

    const double t_af = (1.0 - af) * (t_n + dt) + af * t_n;
    Eigen::VectorXd base = sys_.load_at(t_af) - sys_.K * ((1.0 - af) * u_pred + af * u_n) -
                           sys_.C * ((1.0 - af) * v_pred + af * v_n) - am * (sys_.M * a_n);
    if (has_absorbing_)
        base -= sys_.A1 * ((1.0 - af) * v_pred + af * v_n) + am * (sys_.A2 * a_n);

    const bool nonlinear = static_cast<bool>(sys_.tensor);
    u = u_pred;
    v = v_pred;
    a = a_n;
    Eigen::VectorXd a_new;
    double incr = 0.0;
    for (int it = 1; it <= opts_.max_iter; ++it) {
        Eigen::VectorXd rhs = base;
        if (nonlinear) {
            const Eigen::VectorXd u_af = (1.0 - af) * u + af * u_n;
            const Eigen::VectorXd v_af = (1.0 - af) * v + af * v_n;
            const Eigen::VectorXd a_am = (1.0 - am) * a + am * a_n;
            rhs += sys_.tensor->apply(v_af, v_af) + sys_.tensor->apply(u_af, a_am);
        }
        a_new = mbar_->solve(rhs);
        if (!a_new.allFinite())
            throw StepFailure("non-finite acceleration at step " + std::to_string(step_index), step_index, it, NAN);
        const double nrm = a_new.norm();
        incr = nrm < 1e-30 ? 0.0 : (a_new - a).norm() / nrm;
        a = a_new;
        u = u_pred + (beta * dt * dt) * a;
        v = v_pred + (gamma * dt) * a;
        if (incr <= opts_.tol_u || !nonlinear)
            return it;
    }
    throw StepFailure("fixed-point iteration did not converge at step " + std::to_string(step_index) +
                          " (last relative increment " + std::to_string(incr) + ")",
                      step_index, opts_.max_iter, incr);
}

double StateResult::mean_iterations() const
{
    if (iterations.size() < 2)
        return 0.0;
    return std::accumulate(iterations.begin() + 1, iterations.end(), 0.0) / (iterations.size() - 1);
}

int StateResult::max_iterations() const
{
    return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
}

StateResult solve_state(const AssembledSystem& sys, const TimeGrid& grid, const AlphaParams& ap,
                        const StateOptions& opts)
{
    grid.validate();
    if (!(opts.tol_u > 0.0))
        throw ConfigError("tol_u must be positive");
    GenAlphaStepper stepper(sys, grid.dt(), ap, opts);
    StateResult res;
    res.field = TimeSeriesField::zeros(sys.n, grid);
    res.iterations.assign(grid.n_steps, 0);
    auto& F = res.field;
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(sys.n), v0 = u0;
    F.accel.col(0) = stepper.initial_acceleration(0.0, u0, v0);
    if (opts.on_step)
        opts.on_step(0, F.value.col(0));
    Eigen::VectorXd u, v, a;
    for (int n = 0; n + 1 < grid.n_steps; ++n) {
        res.iterations[n + 1] =
            stepper.step(grid.t(n), F.value.col(n), F.rate.col(n), F.accel.col(n), u, v, a, n + 1);
        F.value.col(n + 1) = u;
        F.rate.col(n + 1) = v;
        F.accel.col(n + 1) = a;
        if (opts.on_step)
            opts.on_step(n + 1, u);
    }
    return res;
}

} // namespace lensopt
