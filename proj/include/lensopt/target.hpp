/** @file target.hpp
    @brief Target pressure fields for the tracking cost.
*/
#pragma once

#include "lensopt/state_solver.hpp"

#include <variant>

namespace lensopt {

/// Stationary Gaussian A exp(-x^2/(2 sx^2) - (y - y_fp)^2/(2 sy^2)).
struct GaussianTarget {
    double A = 6e7;
    double y_fp = 0.105;
    double sigma_x = 0.02;
    double sigma_y = 0.004;

    double value(const Point& x) const;
    void validate() const;
};

/// Stored coefficient history; only `value` is used.
struct StoredTarget {
    TimeSeriesField field;
};

using TargetField = std::variant<StoredTarget, GaussianTarget>;

/// L2 projection of a pointwise function onto the discrete space: M c = (f, N_i).
Eigen::VectorXd project_l2(const QuadCache& volume, const SpMat& M, const std::function<double(const Point&)>& f);

/// Resolves a target on one grid and discretization.
class TargetEvaluator {
public:
    TargetEvaluator(const TargetField& tf, const TimeGrid& grid, int n_dofs, const QuadCache* volume = nullptr,
                    const SpMat* M = nullptr);

    /// Coefficient vector at time level n of the grid.
    Eigen::VectorXd at_step(int n) const;
    int n_dofs() const { return n_; }
    const TimeGrid& grid() const { return grid_; }

private:
    TargetField tf_;
    TimeGrid grid_;
    int n_;
    Eigen::VectorXd stationary_;
};

Eigen::VectorXd eval_target(const TargetField& tf, const TimeGrid& grid, int step, int n_dofs,
                            const QuadCache* volume = nullptr, const SpMat* M = nullptr);

} // namespace lensopt
