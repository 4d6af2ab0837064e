/** @file adjoint_solver.hpp
    @brief Backward Newmark sweep for the adjoint pressure.
*/
#pragma once

#include "lensopt/target.hpp"

namespace lensopt {

enum class TensorSource { State, Target };

struct AdjointParams {
    double gamma_p = 0.5;
    double beta_p = 0.25;
    double tol_p = 1e-8;
    int max_iter = 50;
    TensorSource tensor_source = TensorSource::State;

    void validate() const;
};

struct AdjointResult {
    TimeSeriesField field; ///< p, p', p''
    std::vector<int> iterations;
    double mean_iterations() const;
    int max_iterations() const;
};

/// M + gamma_p dt C + beta_p dt^2 K.
SpMat adjoint_effective_matrix(const SpMat& M, const SpMat& C, const SpMat& K, const AdjointParams& ap, double dt);

AdjointResult solve_adjoint(const AssembledSystem& sys, const TimeGrid& grid, const AdjointParams& ap,
                            const TimeSeriesField& u, const TargetEvaluator& u_d);

} // namespace lensopt
