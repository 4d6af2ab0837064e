/** @file geometry_update.hpp
    @brief Boundary moves, Coons reconstruction of patch interiors, feasibility checks.
*/
#pragma once

#include "lensopt/lens_domain.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lensopt {

struct ShapeGradient;

/// Minimal manufacturable thickness of the reference lens.
double reference_lens_dmin(double x);

struct ThicknessConstraint {
    bool enabled = false;
    std::function<double(double)> d_min;

    static ThicknessConstraint none() { return {}; }
    static ThicknessConstraint reference_lens() { return {true, reference_lens_dmin}; }
};

/// Boundary control points of a patch, each side ordered by increasing parameter.
struct BoundaryNet {
    std::vector<Point> south, north, west, east;
};

BoundaryNet boundary_net(const NurbsPatch& patch);

/// Replaces south and north rows; west and east columns follow their corners affinely.
BoundaryNet moved_rows(const NurbsPatch& patch, const std::vector<Point>& south, const std::vector<Point>& north);

/// Interior control points from the discrete Coons combination L1 + L2 - B on the net
/// parametrized by Greville abscissae. Boundary points are copied, weights kept.
NurbsPatch coons_update(const NurbsPatch& patch, const BoundaryNet& boundary);

/// y_i -= alpha * g_i on movable dofs.
LensShape update_boundary(const LensShape& shape, const ShapeGradient& grad, double alpha);
LensShape update_boundary(const LensShape& shape, const Eigen::VectorXd& grad, double alpha);

/// Domain whose lens boundary control points sit at the shape's y values.
/// Patches touching the lens (0, 2, 3) get new interiors; everything else is copied.
MultiPatchDomain apply_shape(const MultiPatchDomain& domain, const LensShape& shape);

struct FeasibilityReport {
    bool ok = true;
    std::vector<int> violating_dofs; ///< indices into LensShape::dofs
    std::vector<std::string> messages;
    double min_jacobian = 0.0;

    explicit operator bool() const { return ok; }
};

/// Thickness at design abscissae, ordering of the boundaries, containment in (0, y_max)
/// and positive Jacobians at all quadrature points of `domain`.
FeasibilityReport check_feasible(const MultiPatchDomain& domain, const LensShape& shape,
                                 const ThicknessConstraint& constraint, double y_max);

/// Root-mean-square difference of design control point ordinates.
double shape_error_l2(const LensShape& shape, const LensShape& goal);

/// y on a graph-like boundary curve at abscissa x.
double curve_y_at(const NurbsCurve& curve, double x);

} // namespace lensopt
