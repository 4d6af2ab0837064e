#include "lensopt/target.hpp"
#include "lensopt/errors.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace lensopt {

double GaussianTarget::value(const Point& x) const
{
    const double dx = x(0) / sigma_x, dy = (x(1) - y_fp) / sigma_y;
    return A * std::exp(-0.5 * (dx * dx + dy * dy));
}

void GaussianTarget::validate() const
{
    if (!(A > 0.0 && sigma_x > 0.0 && sigma_y > 0.0))
        throw ConfigError("Gaussian target needs A > 0 and positive widths");
}

Eigen::VectorXd project_l2(const QuadCache& q, const SpMat& M, const std::function<double(const Point&)>& f)
{
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M.rows());
    for (int k = 0; k < q.n_points(); ++k) {
        const double fw = f(q.x[k]) * q.wdet[k];
        for (int a = q.offset[k]; a < q.offset[k + 1]; ++a)
            rhs[q.dof[a]] += fw * q.val[a];
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(Eigen::SparseMatrix<double>(M));
    if (ldlt.info() != Eigen::Success)
        throw FactorizationError("mass matrix factorization failed in L2 projection");
    return ldlt.solve(rhs);
}

TargetEvaluator::TargetEvaluator(const TargetField& tf, const TimeGrid& grid, int n_dofs, const QuadCache* volume,
                                 const SpMat* M)
    : tf_(tf), grid_(grid), n_(n_dofs)
{
    if (auto* g = std::get_if<GaussianTarget>(&tf_)) {
        g->validate();
        if (!volume || !M)
            throw PreconditionError("Gaussian target needs quadrature data and the mass matrix");
        if (M->rows() != n_dofs)
            throw DimensionError("mass matrix size does not match the target size");
        const GaussianTarget gt = *g;
        stationary_ = project_l2(*volume, *M, [gt](const Point& x) { return gt.value(x); });
    } else {
        const auto& s = std::get<StoredTarget>(tf_);
        if (s.field.n_dofs() != n_dofs)
            throw DimensionError("stored target has " + std::to_string(s.field.n_dofs()) + " dofs, expected " +
                                 std::to_string(n_dofs));
        if (!(s.field.grid == grid)) {
            const double T = s.field.grid.T_final;
            if (s.field.n_steps() != s.field.grid.n_steps || T < grid.T_final * (1.0 - 1e-12))
                throw DimensionError("stored target grid does not cover the optimization grid");
        }
    }
}

Eigen::VectorXd TargetEvaluator::at_step(int n) const
{
    if (n < 0 || n >= grid_.n_steps)
        throw DimensionError("target step index out of range");
    if (std::holds_alternative<GaussianTarget>(tf_))
        return stationary_;
    const auto& f = std::get<StoredTarget>(tf_).field;
    if (f.grid == grid_)
        return f.value.col(n);
    const double s = grid_.t(n) / f.grid.dt();
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, f.n_steps() - 2);
    const double th = std::clamp(s - i, 0.0, 1.0);
    return (1.0 - th) * f.value.col(i) + th * f.value.col(i + 1);
}

Eigen::VectorXd eval_target(const TargetField& tf, const TimeGrid& grid, int step, int n_dofs,
                            const QuadCache* volume, const SpMat* M)
{
    return TargetEvaluator(tf, grid, n_dofs, volume, M).at_step(step);
}

} // namespace lensopt
