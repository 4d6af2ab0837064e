/** @file shape_gradient.hpp
    @brief Tracking cost and its shape sensitivities with respect to lens control points.
*/
#pragma once

#include "lensopt/lens_domain.hpp"
#include "lensopt/target.hpp"

namespace lensopt {

/// Trapezoidal rule in time of (u - u_d)^T M^D (u - u_d).
double cost(const TimeSeriesField& u, const TargetEvaluator& u_d, const SpMat& MD, const TimeGrid& grid);

struct ShapeGradient {
    Eigen::VectorXd values;      ///< one entry per design dof, ordered as LensShape::dofs
    std::vector<bool> movable;   ///< mirrors !pinned
    double norm = 0.0;           ///< Euclidean norm over movable entries

    int size() const { return static_cast<int>(values.size()); }
};

/// Quadrature on the lens/fluid interface with one-sided evaluation from both patches.
class InterfaceQuadrature {
public:
    InterfaceQuadrature(const MultiPatchDomain& domain, int n_points = 0);

    int n_points() const { return static_cast<int>(weight.size()); }

    /// Sparse evaluation operators (rows: points, cols: global dofs).
    SpMat value, grad_lens_x, grad_lens_y, grad_fluid_x, grad_fluid_y;
    std::vector<double> weight;     ///< quadrature weight times surface measure
    std::vector<Point> normal_lens; ///< outward from the lens
    std::vector<Point> x;
};

/// Boundary form of the shape derivative; entry i is dJ in direction N_i e_y.
ShapeGradient shape_gradient_boundary(const TimeSeriesField& u, const TimeSeriesField& p,
                                      const MultiPatchDomain& domain, const Materials& materials,
                                      const LensShape& shape);

/// Control point displacement (one vector per global dof) induced by moving design dof i by +1 in y.
std::vector<Point> design_displacement(const MultiPatchDomain& domain, const LensShape& shape, int i);

/// Volume form of dJ in direction Theta = sum_j theta_j N_j; theta has one entry per global dof.
double shape_gradient_volume_oracle(const TimeSeriesField& u, const TimeSeriesField& p,
                                    const MultiPatchDomain& domain, const Materials& materials,
                                    const std::vector<Point>& theta, const Box& D);

} // namespace lensopt
