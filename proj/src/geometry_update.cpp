#include "lensopt/geometry_update.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/quadrature.hpp"
#include "lensopt/shape_gradient.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace lensopt {

double reference_lens_dmin(double x)
{
    const double a = 0.0608, b = 0.0445;
    return 0.0263 - std::sqrt(a * a - x * x) + std::sqrt(b * b - x * x);
}

BoundaryNet boundary_net(const NurbsPatch& patch)
{
    BoundaryNet b;
    auto take = [&](Side s) {
        std::vector<Point> out;
        for (int idx : patch.side_indices(s))
            out.push_back(patch.control_points()[idx]);
        return out;
    };
    b.south = take(Side::South);
    b.north = take(Side::North);
    b.west = take(Side::West);
    b.east = take(Side::East);
    return b;
}

BoundaryNet moved_rows(const NurbsPatch& patch, const std::vector<Point>& south, const std::vector<Point>& north)
{
    BoundaryNet old = boundary_net(patch);
    if (south.size() != old.south.size() || north.size() != old.north.size())
        throw DimensionError("row length does not match the control net");
    BoundaryNet b{south, north, old.west, old.east};
    auto gv = patch.knots(1).greville();
    const int nv = patch.n(1);
    const Point dw0 = south.front() - old.south.front(), dw1 = north.front() - old.north.front();
    const Point de0 = south.back() - old.south.back(), de1 = north.back() - old.north.back();
    for (int j = 0; j < nv; ++j) {
        b.west[j] += (1.0 - gv[j]) * dw0 + gv[j] * dw1;
        b.east[j] += (1.0 - gv[j]) * de0 + gv[j] * de1;
    }
    b.west.front() = south.front();
    b.west.back() = north.front();
    b.east.front() = south.back();
    b.east.back() = north.back();
    return b;
}

NurbsPatch coons_update(const NurbsPatch& patch, const BoundaryNet& bd)
{
    const int nu = patch.n(0), nv = patch.n(1);
    if (static_cast<int>(bd.south.size()) != nu || static_cast<int>(bd.north.size()) != nu ||
        static_cast<int>(bd.west.size()) != nv || static_cast<int>(bd.east.size()) != nv)
        throw DimensionError("boundary net does not match the control net size");
    const double tol = 1e-12;
    if ((bd.south.front() - bd.west.front()).norm() > tol || (bd.south.back() - bd.east.front()).norm() > tol ||
        (bd.north.front() - bd.west.back()).norm() > tol || (bd.north.back() - bd.east.back()).norm() > tol)
        throw GeometryError("boundary curves do not meet at the corners");
    const Point P00 = bd.south.front(), P10 = bd.south.back(), P01 = bd.north.front(), P11 = bd.north.back();
    auto gu = patch.knots(0).greville(), gv = patch.knots(1).greville();
    NurbsPatch out = patch;
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            Point& X = out.control_point(i, j);
            if (j == 0) {
                X = bd.south[i];
            } else if (j == nv - 1) {
                X = bd.north[i];
            } else if (i == 0) {
                X = bd.west[j];
            } else if (i == nu - 1) {
                X = bd.east[j];
            } else {
                const double s = gu[i], t = gv[j];
                const Point L1 = (1.0 - t) * bd.south[i] + t * bd.north[i];
                const Point L2 = (1.0 - s) * bd.west[j] + s * bd.east[j];
                const Point Bc = (1.0 - s) * (1.0 - t) * P00 + s * (1.0 - t) * P10 + (1.0 - s) * t * P01 + s * t * P11;
                X = L1 + L2 - Bc;
            }
        }
    return out;
}

LensShape update_boundary(const LensShape& shape, const Eigen::VectorXd& grad, double alpha)
{
    if (grad.size() != shape.size())
        throw DimensionError("gradient and shape have different dof sets");
    LensShape out = shape;
    for (int i = 0; i < shape.size(); ++i)
        if (!shape.dofs[i].pinned)
            out.dofs[i].y = shape.dofs[i].y - alpha * grad(i);
    return out;
}

LensShape update_boundary(const LensShape& shape, const ShapeGradient& grad, double alpha)
{
    return update_boundary(shape, grad.values, alpha);
}

MultiPatchDomain apply_shape(const MultiPatchDomain& domain, const LensShape& shape)
{
    std::map<int, double> ynew;
    for (const auto& d : shape.dofs)
        ynew[d.global] = d.y;
    MultiPatchDomain out = domain;
    for (int p = 0; p < domain.n_patches(); ++p) {
        const NurbsPatch& old = domain.patches[p];
        bool changed = false;
        std::vector<Point> rows[2];
        const Side sides[2] = {Side::South, Side::North};
        for (int r = 0; r < 2; ++r)
            for (int loc : old.side_indices(sides[r])) {
                Point P = old.control_points()[loc];
                auto it = ynew.find(domain.dofs(p, loc));
                if (it != ynew.end() && it->second != P(1)) {
                    P(1) = it->second;
                    changed = true;
                }
                rows[r].push_back(P);
            }
        for (int k = 0; k < old.size(); ++k) {
            auto it = ynew.find(domain.dofs(p, k));
            if (it == ynew.end() || it->second == old.control_points()[k](1))
                continue;
            const int i = k % old.n(0), j = k / old.n(0);
            if (j != 0 && j != old.n(1) - 1)
                throw GeometryError("design dof lies inside patch " + std::to_string(p) + " away from its rows");
            (void)i;
        }
        if (!changed)
            continue;
        out.patches[p] = coons_update(old, moved_rows(old, rows[0], rows[1]));
    }
    return out;
}

double curve_y_at(const NurbsCurve& curve, double x)
{
    double lo = 0.0, hi = 1.0;
    const double x0 = curve.eval(0.0)(0), x1 = curve.eval(1.0)(0);
    const bool increasing = x1 >= x0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double xm = curve.eval(mid)(0);
        if ((xm < x) == increasing)
            lo = mid;
        else
            hi = mid;
    }
    return curve.eval(0.5 * (lo + hi))(1);
}

FeasibilityReport check_feasible(const MultiPatchDomain& domain, const LensShape& shape,
                                 const ThicknessConstraint& constraint, double y_max)
{
    FeasibilityReport rep;
    const int lp = domain.lens_patch;
    if (lp < 0)
        throw PreconditionError("domain has no lens patch");
    const NurbsPatch& lens = domain.patches[lp];
    const NurbsCurve upper = lens.side_curve(Side::North), lower = lens.side_curve(Side::South);
    const double x_tip = lens.control_point(lens.n(0) - 1, 0)(0);
    auto fail = [&](int dof, const std::string& msg) {
        rep.ok = false;
        if (dof >= 0)
            rep.violating_dofs.push_back(dof);
        rep.messages.push_back(msg);
    };

    for (int i = 0; i < shape.size(); ++i) {
        const auto& d = shape.dofs[i];
        if (!(d.y > 0.0 && d.y < y_max))
            fail(i, "design dof " + std::to_string(i) + " leaves the admissible band");
        if (constraint.enabled && d.x < x_tip * (1.0 - 1e-9)) {
            const double th = curve_y_at(upper, d.x) - curve_y_at(lower, d.x);
            const double dm = constraint.d_min(d.x);
            if (th < dm) {
                std::ostringstream os;
                os << "thickness " << th << " below minimum " << dm << " at x = " << d.x << " (dof " << i << ")";
                fail(i, os.str());
            }
        }
    }
    const int ns = 400;
    for (int k = 1; k < ns; ++k) {
        const double x = x_tip * k / ns;
        const double yu = curve_y_at(upper, x), yl = curve_y_at(lower, x);
        if (yu < yl) {
            fail(-1, "upper lens boundary crosses the lower one at x = " + std::to_string(x));
            break;
        }
        if (!(yl > 0.0 && yu < y_max)) {
            fail(-1, "lens boundary leaves the domain at x = " + std::to_string(x));
            break;
        }
    }

    double min_det = 1e300;
    BasisValues b;
    for (int pid = 0; pid < domain.n_patches(); ++pid) {
        const NurbsPatch& p = domain.patches[pid];
        const QuadRule1D& r = gauss_legendre(std::max(p.degree(0), p.degree(1)) + 1);
        auto zu = p.knots(0).breakpoints(), zv = p.knots(1).breakpoints();
        bool bad = false;
        for (size_t ev = 0; ev + 1 < zv.size() && !bad; ++ev)
            for (size_t eu = 0; eu + 1 < zu.size() && !bad; ++eu)
                for (double sv : r.nodes)
                    for (double su : r.nodes) {
                        Point xh(zu[eu] + (zu[eu + 1] - zu[eu]) * su, zv[ev] + (zv[ev + 1] - zv[ev]) * sv);
                        const double det = p.eval_geometry_unchecked(xh).det;
                        min_det = std::min(min_det, det);
                        if (!(det > 0.0) && !bad) {
                            bad = true;
                            fail(-1, "non-positive Jacobian on patch " + std::to_string(pid));
                        }
                    }
    }
    rep.min_jacobian = min_det;
    return rep;
}

double shape_error_l2(const LensShape& shape, const LensShape& goal)
{
    if (shape.size() != goal.size() || shape.size() == 0)
        throw DimensionError("shape error needs matching, non-empty dof sets");
    double s = 0.0;
    for (int i = 0; i < shape.size(); ++i) {
        if (shape.dofs[i].global != goal.dofs[i].global)
            throw DimensionError("shape error: dof " + std::to_string(i) + " differs between shapes");
        const double d = goal.dofs[i].y - shape.dofs[i].y;
        s += d * d;
    }
    return std::sqrt(s / shape.size());
}

} // namespace lensopt
