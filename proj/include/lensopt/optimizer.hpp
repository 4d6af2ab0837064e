/** @file optimizer.hpp
    @brief Problem setup, cost/gradient evaluation and the descent loop with step size control.
*/
#pragma once

#include "lensopt/adjoint_solver.hpp"
#include "lensopt/geometry_update.hpp"
#include "lensopt/shape_gradient.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace lensopt {

/// Everything needed to evaluate the tracking cost of a lens shape.
struct Problem {
    DomainParams params;
    int degree = 2;
    Refinement refinement = Refinement::paper_like();
    Materials materials;
    Excitation excitation;
    TimeGrid grid;
    AlphaParams alpha;
    StateOptions state;
    AdjointParams adjoint;
    AssemblyOptions assembly;
    std::optional<Box> tracking; ///< defaults to the extent of the tracking patch
    TargetField target = GaussianTarget{};
    MovingSet moving = MovingSet::Both;
    ThicknessConstraint thickness;

    MultiPatchDomain initial_domain() const;
    Box tracking_box(const MultiPatchDomain& domain) const;
};

struct Evaluation {
    MultiPatchDomain domain;
    AssembledSystem system;
    std::shared_ptr<const QuadCache> volume;
    std::shared_ptr<TargetEvaluator> target;
    StateResult state;
    double J = 0.0;
};

/// Assemble on `domain`, solve the state problem and evaluate the cost.
Evaluation evaluate(const Problem& problem, const MultiPatchDomain& domain);

struct GradientResult {
    AdjointResult adjoint;
    ShapeGradient gradient;
};

GradientResult compute_gradient(const Problem& problem, const Evaluation& eval, const LensShape& shape);

/// Central difference of J with respect to design dof i.
double fd_derivative(const Problem& problem, const MultiPatchDomain& base, const LensShape& shape, int i, double tau);

struct OptConfig {
    int s_max = 30;
    double tol_grad = 1e-4;
    double tol_step = 1e-8;
    double base = 1e-3;
    double grow = 2.0;
    double shrink = 0.5;

    void validate() const;
};

struct StepRecord {
    int step = 0;
    double J = 0.0;
    double J_rel = 1.0;
    double gradnorm = 0.0;
    double gradnorm_rel = 1.0;
    double alpha = 0.0;
    bool accepted = true;
    int repeats = 0;
    double shape_error = -1.0; ///< negative when no goal is known
    LensShape shape;
    Eigen::VectorXd gradient;
};

struct OptimizationHistory {
    std::vector<StepRecord> steps; ///< step 0 is the initial shape
    std::string stop_reason;
    int rejected_trials = 0;
    LensShape final_shape;
    MultiPatchDomain final_domain;
};

using StepCallback = std::function<void(const StepRecord&)>;

OptimizationHistory optimize(const Problem& problem, const OptConfig& opt, const LensShape* goal = nullptr,
                             const StepCallback& on_step = {});

struct SyntheticOptions {
    int refine_factor = 2; ///< element multiplier of the data mesh
    int dt_factor = 2;     ///< time step divisor of the data grid
    double noise = 0.02;   ///< relative to the field amplitude of each time level
    std::uint64_t seed = 12345;
};

/// Data for a known goal lens: solved on a finer mesh and grid, projected onto the tracking patch
/// of the optimization mesh, then polluted with Gaussian noise.
TimeSeriesField make_synthetic_target(const Problem& problem, const DomainParams& goal, const SyntheticOptions& opts);

} // namespace lensopt
