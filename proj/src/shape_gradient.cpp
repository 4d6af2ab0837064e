#include "lensopt/shape_gradient.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/geometry_update.hpp"
#include "lensopt/quadrature.hpp"

#include <cmath>

namespace lensopt {

namespace {

Eigen::VectorXd trapezoid_weights(const TimeGrid& grid)
{
    Eigen::VectorXd w = Eigen::VectorXd::Constant(grid.n_steps, grid.dt());
    w(0) *= 0.5;
    w(grid.n_steps - 1) *= 0.5;
    return w;
}

Point side_param(Side s, double t)
{
    switch (s) {
    case Side::South: return {t, 0.0};
    case Side::North: return {t, 1.0};
    case Side::West: return {0.0, t};
    default: return {1.0, t};
    }
}

} // namespace

double cost(const TimeSeriesField& u, const TargetEvaluator& u_d, const SpMat& MD, const TimeGrid& grid)
{
    if (u.n_steps() != grid.n_steps || !(u_d.grid() == grid) || u.n_dofs() != u_d.n_dofs() ||
        MD.rows() != u.n_dofs())
        throw DimensionError("cost: state, target and grid do not match");
    const Eigen::VectorXd w = trapezoid_weights(grid);
    double J = 0.0;
    for (int n = 0; n < grid.n_steps; ++n) {
        const Eigen::VectorXd e = u.value.col(n) - u_d.at_step(n);
        J += w(n) * e.dot(MD * e);
    }
    return J;
}

InterfaceQuadrature::InterfaceQuadrature(const MultiPatchDomain& domain, int n_points)
{
    const int lp = domain.lens_patch;
    if (lp < 0)
        throw PreconditionError("domain has no lens patch");
    const int n = domain.n_global();
    std::vector<Eigen::Triplet<double>> tv, tlx, tly, tfx, tfy;
    BasisValues scratch;
    int row = 0;
    for (const auto& link : domain.links) {
        int fp;
        Side ls, fs;
        if (link.patch_a == lp) {
            fp = link.patch_b;
            ls = link.side_a;
            fs = link.side_b;
        } else if (link.patch_b == lp) {
            fp = link.patch_a;
            ls = link.side_b;
            fs = link.side_a;
        } else {
            continue;
        }
        if (domain.tag(lp, ls) != BoundaryTag::LensInterface)
            continue;
        const NurbsPatch& L = domain.patches[lp];
        const NurbsPatch& F = domain.patches[fp];
        const int dir = (ls == Side::South || ls == Side::North) ? 0 : 1;
        const int nq = n_points > 0 ? n_points : std::max(L.degree(0), L.degree(1)) + 1;
        const QuadRule1D& r = gauss_legendre(nq);
        auto z = L.knots(dir).breakpoints();
        for (size_t e = 0; e + 1 < z.size(); ++e)
            for (size_t i = 0; i < r.nodes.size(); ++i) {
                const double h = z[e + 1] - z[e];
                const double t = z[e] + h * r.nodes[i];
                QuadCache ql, qf;
                ql.append_point(L, lp, domain.dofs, side_param(ls, t), 1.0, scratch, false);
                qf.append_point(F, fp, domain.dofs, side_param(fs, link.reversed ? 1.0 - t : t), 1.0, scratch,
                                false);
                if ((ql.x[0] - qf.x[0]).norm() > 1e-11)
                    throw ConformityError("interface point does not coincide between lens patch and patch " +
                                          std::to_string(fp));
                // tangent along the side and outward lens normal
                const GeometryEval g = L.eval_geometry(side_param(ls, t), lp);
                const Point tang = g.jacobian.col(dir);
                Point nrm(tang(1), -tang(0));
                nrm.normalize();
                const Point inward = g.jacobian.col(1 - dir) * ((ls == Side::South || ls == Side::West) ? 1.0 : -1.0);
                if (nrm.dot(inward) > 0)
                    nrm = -nrm;
                weight.push_back(r.weights[i] * h * tang.norm());
                normal_lens.push_back(nrm);
                x.push_back(ql.x[0]);
                for (int a = ql.offset[0]; a < ql.offset[1]; ++a) {
                    tv.emplace_back(row, ql.dof[a], ql.val[a]);
                    tlx.emplace_back(row, ql.dof[a], ql.grad[a](0));
                    tly.emplace_back(row, ql.dof[a], ql.grad[a](1));
                }
                for (int a = qf.offset[0]; a < qf.offset[1]; ++a) {
                    tfx.emplace_back(row, qf.dof[a], qf.grad[a](0));
                    tfy.emplace_back(row, qf.dof[a], qf.grad[a](1));
                }
                ++row;
            }
    }
    auto build = [&](SpMat& m, const std::vector<Eigen::Triplet<double>>& t) {
        m.resize(row, n);
        m.setFromTriplets(t.begin(), t.end());
        m.makeCompressed();
    };
    build(value, tv);
    build(grad_lens_x, tlx);
    build(grad_lens_y, tly);
    build(grad_fluid_x, tfx);
    build(grad_fluid_y, tfy);
}

ShapeGradient shape_gradient_boundary(const TimeSeriesField& u, const TimeSeriesField& p,
                                      const MultiPatchDomain& domain, const Materials& materials,
                                      const LensShape& shape)
{
    if (u.n_steps() != p.n_steps() || u.n_dofs() != p.n_dofs() || u.n_dofs() != domain.n_global() ||
        !(u.grid == p.grid))
        throw DimensionError("state and adjoint histories do not match");
    InterfaceQuadrature iq(domain);
    const MaterialParams& ml = materials.lens;
    const MaterialParams& mf = materials.fluid;
    const double dk = ml.k() - mf.k();
    const double dc2 = ml.c * ml.c - mf.c * mf.c;
    const double db = ml.b - mf.b;

    const Eigen::MatrixXd U = iq.value * u.value;
    const Eigen::MatrixXd Ud = iq.value * u.rate;
    const Eigen::MatrixXd Pd = iq.value * p.rate;
    const Eigen::MatrixXd Gdx = iq.grad_lens_x * u.rate, Gdy = iq.grad_lens_y * u.rate;
    const Eigen::MatrixXd Pfx = iq.grad_fluid_x * p.value, Pfy = iq.grad_fluid_y * p.value;
    const Eigen::MatrixXd Ulx = iq.grad_lens_x * u.value, Uly = iq.grad_lens_y * u.value;
    const Eigen::MatrixXd Ufx = iq.grad_fluid_x * u.value, Ufy = iq.grad_fluid_y * u.value;
    const Eigen::MatrixXd Plx = iq.grad_lens_x * p.value, Ply = iq.grad_lens_y * p.value;

    // tangential gradients are single valued, normal fluxes are averaged over both sides
    const double cl2 = ml.c * ml.c, cf2 = mf.c * mf.c;
    const double dinv = 1.0 / cl2 - 1.0 / cf2;
    Eigen::MatrixXd I(iq.n_points(), u.n_steps());
    for (int k = 0; k < iq.n_points(); ++k) {
        const Point nl = iq.normal_lens[k];
        const Point tg(-nl(1), nl(0));
        for (int t = 0; t < u.n_steps(); ++t) {
            const Point gul(Ulx(k, t), Uly(k, t)), guf(Ufx(k, t), Ufy(k, t));
            const Point gpl(Plx(k, t), Ply(k, t)), gpf(Pfx(k, t), Pfy(k, t));
            const double ut = 0.5 * (gul + guf).dot(tg), pt = 0.5 * (gpl + gpf).dot(tg);
            const double fu = 0.5 * (cl2 * gul.dot(nl) + cf2 * guf.dot(nl));
            const double fp = 0.5 * (cl2 * gpl.dot(nl) + cf2 * gpf.dot(nl));
            I(k, t) = 2.0 * dk * U(k, t) * Ud(k, t) * Pd(k, t) + dc2 * ut * pt - dinv * fu * fp +
                      db * (Gdx(k, t) * Pfx(k, t) + Gdy(k, t) * Pfy(k, t));
        }
    }
    const Eigen::VectorXd A = I * trapezoid_weights(u.grid);
    Eigen::VectorXd s(iq.n_points());
    for (int k = 0; k < iq.n_points(); ++k)
        s(k) = iq.weight[k] * A(k) * iq.normal_lens[k](1);
    const Eigen::VectorXd glob = -(iq.value.transpose() * s);

    ShapeGradient g;
    g.values.resize(shape.size());
    g.movable.resize(shape.size());
    double nn = 0.0;
    for (int i = 0; i < shape.size(); ++i) {
        g.values(i) = glob(shape.dofs[i].global);
        g.movable[i] = !shape.dofs[i].pinned;
        if (g.movable[i])
            nn += g.values(i) * g.values(i);
    }
    g.norm = std::sqrt(nn);
    return g;
}

std::vector<Point> design_displacement(const MultiPatchDomain& domain, const LensShape& shape, int i)
{
    const MultiPatchDomain base = apply_shape(domain, shape);
    LensShape moved = shape;
    moved.dofs.at(i).y += 1.0;
    const MultiPatchDomain pert = apply_shape(domain, moved);
    std::vector<Point> theta(domain.n_global(), Point::Zero());
    for (int p = 0; p < domain.n_patches(); ++p)
        for (int k = 0; k < domain.patches[p].size(); ++k)
            theta[domain.dofs(p, k)] = pert.patches[p].control_points()[k] - base.patches[p].control_points()[k];
    return theta;
}

double shape_gradient_volume_oracle(const TimeSeriesField& u, const TimeSeriesField& p,
                                    const MultiPatchDomain& domain, const Materials& materials,
                                    const std::vector<Point>& theta, const Box& D)
{
    if (static_cast<int>(theta.size()) != domain.n_global())
        throw DimensionError("deformation field must have one vector per global dof");
    if (u.n_steps() != p.n_steps() || u.n_dofs() != domain.n_global() || p.n_dofs() != domain.n_global())
        throw DimensionError("state and adjoint histories do not match");
    for (BoundaryTag tag : {BoundaryTag::Excitation, BoundaryTag::Absorbing})
        for (int pid = 0; pid < domain.n_patches(); ++pid)
            for (int s = 0; s < 4; ++s)
                if (domain.tags[pid][s] == tag)
                    for (int g : domain.side_globals(pid, static_cast<Side>(s)))
                        if (theta[g].norm() != 0.0)
                            throw PreconditionError("deformation field does not vanish on the outer boundary");
    const QuadCache q = volume_quadrature(domain);
    std::vector<int> rows;
    std::vector<Eigen::Matrix2d> DT;
    for (int k = 0; k < q.n_points(); ++k) {
        Eigen::Matrix2d Dt = Eigen::Matrix2d::Zero();
        bool any = false;
        for (int a = q.offset[k]; a < q.offset[k + 1]; ++a)
            if (theta[q.dof[a]].squaredNorm() != 0.0) {
                Dt += theta[q.dof[a]] * q.grad[a].transpose();
                any = true;
            }
        if (!any)
            continue;
        if (!D.empty() && D.contains(q.x[k]))
            throw PreconditionError("deformation field overlaps the tracking region");
        rows.push_back(k);
        DT.push_back(Dt);
    }
    if (rows.empty())
        return 0.0;
    const int nr = static_cast<int>(rows.size()), n = domain.n_global();
    std::vector<Eigen::Triplet<double>> tv, tx, ty;
    for (int r = 0; r < nr; ++r) {
        const int k = rows[r];
        for (int a = q.offset[k]; a < q.offset[k + 1]; ++a) {
            tv.emplace_back(r, q.dof[a], q.val[a]);
            tx.emplace_back(r, q.dof[a], q.grad[a](0));
            ty.emplace_back(r, q.dof[a], q.grad[a](1));
        }
    }
    SpMat V(nr, n), X(nr, n), Y(nr, n);
    V.setFromTriplets(tv.begin(), tv.end());
    X.setFromTriplets(tx.begin(), tx.end());
    Y.setFromTriplets(ty.begin(), ty.end());
    const Eigen::MatrixXd Uv = V * u.value, Ud = V * u.rate, Ua = V * u.accel, Pv = V * p.value;
    const Eigen::MatrixXd Ux = X * u.value, Uy = Y * u.value, Udx = X * u.rate, Udy = Y * u.rate;
    const Eigen::MatrixXd Px = X * p.value, Py = Y * p.value;
    const Eigen::VectorXd w = trapezoid_weights(u.grid);
    double total = 0.0;
    for (int r = 0; r < nr; ++r) {
        const int k = rows[r];
        const MaterialParams& m = materials.of(domain.regions[q.patch[k]]);
        const double c2 = m.c * m.c, b = m.b, kk = m.k();
        const Eigen::Matrix2d S = DT[r] + DT[r].transpose();
        const double div = DT[r].trace();
        double acc = 0.0;
        for (int t = 0; t < u.n_steps(); ++t) {
            const Point flux(c2 * Ux(r, t) + b * Udx(r, t), c2 * Uy(r, t) + b * Udy(r, t));
            const Point gp(Px(r, t), Py(r, t));
            const double t1 = flux.dot(S * gp);
            const double t2 = (1.0 - 2.0 * kk * Uv(r, t)) * Ua(r, t) * Pv(r, t) + flux.dot(gp) -
                              2.0 * kk * Ud(r, t) * Ud(r, t) * Pv(r, t);
            acc += w(t) * (t1 - t2 * div);
        }
        total += q.wdet[k] * acc;
    }
    return total;
}

} // namespace lensopt
