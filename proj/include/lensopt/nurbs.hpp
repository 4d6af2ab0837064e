/** @file nurbs.hpp
    @brief B-spline and NURBS bases, curves and bivariate patches.
*/
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace lensopt {

using Point = Eigen::Vector2d;

/// Open knot vector on [0,1].
class KnotVector {
public:
    KnotVector() = default;
    KnotVector(std::vector<double> knots, int degree);

    /// Open knot vector with equally spaced interior knots.
    static KnotVector uniform(int degree, int n_elements);

    int degree() const { return degree_; }
    int n_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
    const std::vector<double>& knots() const { return knots_; }

    /// Unique knot values (element boundaries).
    std::vector<double> breakpoints() const;
    int n_elements() const { return static_cast<int>(breakpoints().size()) - 1; }

    /// Span index mu with knots[mu] <= x < knots[mu+1]; the last span is closed at 1.
    int find_span(double x) const;

    /// Values and first derivatives of the q+1 functions nonzero on `span`,
    /// i.e. functions span-q .. span.
    void eval_local(int span, double x, double* values, double* derivs) const;

    /// Knot averages, one per basis function.
    std::vector<double> greville() const;

    /// Insert every breakpoint of a uniform n_elements split that is not yet present.
    std::vector<double> missing_uniform_knots(int n_elements) const;

    bool operator==(const KnotVector& o) const { return degree_ == o.degree_ && knots_ == o.knots_; }

private:
    std::vector<double> knots_;
    int degree_ = 0;
};

std::vector<double> eval_bspline_basis(const KnotVector& kv, double x);
std::vector<double> eval_bspline_deriv(const KnotVector& kv, double x);

/// Rational curve in the plane.
struct NurbsCurve {
    KnotVector knots;
    std::vector<Point> points;
    std::vector<double> weights;

    Point eval(double t) const;
    Point derivative(double t) const;

    /// Boehm insertion of a single knot; the curve is unchanged geometrically.
    NurbsCurve with_knot(double t) const;
    /// Insert knots until the breakpoints are i/n_elements.
    NurbsCurve refined_uniform(int n_elements) const;
};

/// Patch side, v = 0 is South, u = 1 East, v = 1 North, u = 0 West.
enum class Side { South = 0, East = 1, North = 2, West = 3 };

struct BasisValues {
    std::vector<int> index; ///< flattened local index i + n_u * j
    std::vector<double> value;
    std::vector<Point> grad; ///< parametric gradient
};

struct GeometryEval {
    Point point;
    Eigen::Matrix2d jacobian; ///< columns d/du, d/dv
    double det = 0.0;
};

class NurbsPatch {
public:
    NurbsPatch() = default;
    NurbsPatch(KnotVector ku, KnotVector kv, std::vector<Point> control_points, std::vector<double> weights);

    const KnotVector& knots(int dir) const { return dir == 0 ? ku_ : kv_; }
    int n(int dir) const { return knots(dir).n_basis(); }
    int size() const { return n(0) * n(1); }
    int degree(int dir) const { return knots(dir).degree(); }
    int index(int i, int j) const { return i + n(0) * j; }

    const std::vector<Point>& control_points() const { return cps_; }
    std::vector<Point>& control_points() { return cps_; }
    const Point& control_point(int i, int j) const { return cps_[index(i, j)]; }
    Point& control_point(int i, int j) { return cps_[index(i, j)]; }
    const std::vector<double>& weights() const { return w_; }
    double weight(int i, int j) const { return w_[index(i, j)]; }

    /// Nonzero rational basis functions and their parametric gradients.
    void eval_basis(const Point& xhat, BasisValues& out) const;
    BasisValues eval_basis(const Point& xhat) const;

    Point map(const Point& xhat) const;
    /// Throws DegenerateGeometryError if det DG <= 0.
    GeometryEval eval_geometry(const Point& xhat, int patch_id = -1) const;
    GeometryEval eval_geometry_unchecked(const Point& xhat) const;

    /// Local indices of the control points on one side, ordered by increasing parameter.
    std::vector<int> side_indices(Side s) const;
    NurbsCurve side_curve(Side s) const;

    std::string serialize() const;
    static NurbsPatch deserialize(std::istream& in);
    static NurbsPatch deserialize(const std::string& text);

    bool operator==(const NurbsPatch& o) const;

private:
    void check_param(const Point& xhat) const;

    KnotVector ku_, kv_;
    std::vector<Point> cps_;
    std::vector<double> w_;
};

/// Bilinear patch through four corners (ll, lr, ul, ur) with uniform knots.
NurbsPatch bilinear_patch(const Point& ll, const Point& lr, const Point& ul, const Point& ur,
                          int degree_u, int degree_v, int n_el_u, int n_el_v);

} // namespace lensopt
