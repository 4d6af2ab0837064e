#include "lensopt/adjoint_solver.hpp"
#include "lensopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lensopt {

void AdjointParams::validate() const
{
    if (!(beta_p > 0.0) || !(gamma_p > 0.0 && gamma_p <= 1.0))
        throw ConfigError("adjoint Newmark parameters need beta_p > 0 and gamma_p in (0, 1]");
    if (!(tol_p > 0.0))
        throw ConfigError("tol_p must be positive");
    if (max_iter < 1)
        throw ConfigError("adjoint max_iter must be >= 1");
}

double AdjointResult::mean_iterations() const
{
    if (iterations.size() < 2)
        return 0.0;
    return std::accumulate(iterations.begin(), iterations.end() - 1, 0.0) / (iterations.size() - 1);
}

int AdjointResult::max_iterations() const
{
    return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
}

SpMat adjoint_effective_matrix(const SpMat& M, const SpMat& C, const SpMat& K, const AdjointParams& ap, double dt)
{
    SpMat A = M + (ap.gamma_p * dt) * C + (ap.beta_p * dt * dt) * K;
    A.makeCompressed();
    return A;
}

AdjointResult solve_adjoint(const AssembledSystem& sys, const TimeGrid& grid, const AdjointParams& ap,
                            const TimeSeriesField& u, const TargetEvaluator& u_d)
{
    ap.validate();
    grid.validate();
    sys.validate();
    if (u.n_steps() != grid.n_steps || u.n_dofs() != sys.n || u.rate.cols() != grid.n_steps)
        throw PreconditionError("forward history missing or on a different grid");
    if (u_d.n_dofs() != sys.n || !(u_d.grid() == grid))
        throw PreconditionError("target is not resolved on the adjoint grid");

    const double dt = grid.dt(), beta = ap.beta_p, gamma = ap.gamma_p;
    const bool nonlinear = static_cast<bool>(sys.tensor);
    const bool absorbing = sys.A1.nonZeros() > 0 || sys.A2.nonZeros() > 0;
    SpMat A = adjoint_effective_matrix(sys.M, sys.C, sys.K, ap, dt);
    if (absorbing)
        A += (gamma * dt) * sys.A1 + sys.A2;
    FactorizedMatrix mbar(A);

    AdjointResult res;
    res.field = TimeSeriesField::zeros(sys.n, grid);
    res.iterations.assign(grid.n_steps, 0);
    auto& P = res.field;
    const int m = grid.n_steps - 1;

    for (int n = m; n >= 1; --n) {
        const Eigen::VectorXd p_n = P.value.col(n), v_n = P.rate.col(n), a_n = P.accel.col(n);
        const Eigen::VectorXd p_pred = p_n - dt * v_n + (0.5 * dt * dt * (1.0 - 2.0 * beta)) * a_n;
        const Eigen::VectorXd v_pred = v_n - ((1.0 - gamma) * dt) * a_n;
        const Eigen::VectorXd ud = u_d.at_step(n - 1);
        const Eigen::VectorXd Fbar = 2.0 * (sys.MD * (u.value.col(n - 1) - ud));
        const Eigen::VectorXd& coef = ap.tensor_source == TensorSource::State ? Eigen::VectorXd(u.value.col(n - 1)) : ud;
        const Eigen::VectorXd Kp = sys.K * p_pred, Cv = sys.C * v_pred;
        Eigen::VectorXd base = Fbar + Cv - Kp;
        if (absorbing)
            base += sys.A1 * v_pred;
        const double scale_fixed = Fbar.norm() + Kp.norm() + Cv.norm();

        Eigen::VectorXd a = a_n, p = p_pred, v = v_pred;
        int it = 1;
        for (;; ++it) {
            Eigen::VectorXd rhs = base;
            Eigen::VectorXd Ta;
            if (nonlinear) {
                Ta = sys.tensor->apply(coef, a);
                rhs += Ta;
            }
            a = mbar.solve(rhs);
            if (!a.allFinite())
                throw StepFailure("non-finite adjoint acceleration at step " + std::to_string(n - 1), n - 1, it, NAN);
            p = p_pred + (beta * dt * dt) * a;
            v = v_pred - (gamma * dt) * a;
            if (!nonlinear)
                break;
            Eigen::VectorXd r = sys.M * a - sys.C * v + sys.K * p - Fbar;
            if (nonlinear)
                r -= sys.tensor->apply(coef, a);
            if (absorbing)
                r += -(sys.A1 * v) + sys.A2 * a;
            const double scale = scale_fixed + (sys.M * a).norm();
            if (scale == 0.0 || r.norm() <= ap.tol_p * scale)
                break;
            if (it >= ap.max_iter)
                throw StepFailure("adjoint iteration did not converge at step " + std::to_string(n - 1) +
                                      " (relative residual " + std::to_string(r.norm() / scale) + ")",
                                  n - 1, it, r.norm() / scale);
        }
        P.value.col(n - 1) = p;
        P.rate.col(n - 1) = v;
        P.accel.col(n - 1) = a;
        res.iterations[n - 1] = it;
    }
    return res;
}

} // namespace lensopt
