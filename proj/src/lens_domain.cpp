#include "lensopt/lens_domain.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/geometry_update.hpp"

#include <cmath>
#include <set>

namespace lensopt {

void DomainParams::validate() const
{
    for (double v : {L, B, K, W, P, S, R})
        if (!(v > 0.0) || !std::isfinite(v))
            throw GeometryError("domain lengths must be positive");
    if (!(R < K && K < S && S < L))
        throw GeometryError("domain lengths must satisfy R < K < S < L");
    if (!(W < B))
        throw GeometryError("lens half width W must be smaller than B");
    if (R + P > K + 1e-15)
        throw GeometryError("upper lens boundary on the axis (R + P) lies above the tip height K");
    if (!(std::abs(K - R) < W) || !(std::abs(K - R - P) < W))
        throw GeometryError("lens arc is not a graph over [0, W]: |K - y_axis| must be below W");
}

DomainParams lens_preset(const std::string& name)
{
    DomainParams p;
    if (name == "upper_straight") {
        p.P = 0.02; p.R = 0.04;
    } else if (name == "upper_curved") {
        p.P = 0.015; p.R = 0.04;
    } else if (name == "both_perturbed") {
        p.P = 0.016; p.R = 0.042;
    } else if (name == "both_down") {
        p.P = 0.021; p.R = 0.037;
    } else if (name == "gauss") {
        p.P = 0.025; p.R = 0.035;
    } else {
        throw ConfigError("unknown lens preset '" + name + "'");
    }
    return p;
}

Refinement Refinement::layout(int nx_left, int nx_right, int ny_bottom, int ny_lens, int ny_middle, int ny_top)
{
    Refinement r;
    r.elements = {{{nx_left, ny_bottom}, {nx_right, ny_bottom}, {nx_left, ny_lens}, {nx_left, ny_middle},
                   {nx_right, ny_middle}, {nx_left, ny_top}, {nx_right, ny_top}}};
    return r;
}

Refinement Refinement::paper_like() { return layout(36, 9, 73, 35, 36, 36); }

void Refinement::validate() const
{
    for (const auto& e : elements)
        if (e[0] < 1 || e[1] < 1)
            throw DomainError("element counts must be >= 1");
    auto same = [&](int a, int da, int b, int db) {
        if (elements[a][da] != elements[b][db])
            throw ConformityError("refinement of patch " + std::to_string(a) + " and patch " + std::to_string(b) +
                                  " does not match on their shared edge");
    };
    same(0, 0, 2, 0);
    same(2, 0, 3, 0);
    same(3, 0, 5, 0);
    same(1, 0, 4, 0);
    same(4, 0, 6, 0);
    same(0, 1, 1, 1);
    same(3, 1, 4, 1);
    same(5, 1, 6, 1);
}

NurbsCurve lens_arc(double y_axis, double W, double K, int degree, int n_elements)
{
    const double d = K - y_axis;
    if (!(std::abs(d) < W))
        throw GeometryError("arc rise must be smaller than the lens half width");
    NurbsCurve c;
    if (degree == 2 && d != 0.0) {
        const double rho = (W * W + d * d) / (2.0 * std::abs(d));
        const double theta = std::asin(W / rho);
        c.knots = KnotVector({0, 0, 0, 1, 1, 1}, 2);
        c.points = {Point(0.0, y_axis), Point(rho * std::tan(0.5 * theta), y_axis), Point(W, K)};
        c.weights = {1.0, std::cos(0.5 * theta), 1.0};
        return c.refined_uniform(n_elements);
    }
    c.knots = KnotVector::uniform(degree, n_elements);
    for (double g : c.knots.greville()) {
        double x = W * g;
        double y = y_axis;
        if (d != 0.0) {
            const double rho = (W * W + d * d) / (2.0 * std::abs(d));
            y = y_axis + std::copysign(rho - std::sqrt(rho * rho - x * x), d);
        }
        c.points.emplace_back(x, y);
        c.weights.push_back(1.0);
    }
    return c;
}

namespace {

std::vector<Point> straight(const Point& a, const Point& b, const KnotVector& kv)
{
    std::vector<Point> out;
    for (double g : kv.greville())
        out.push_back((1.0 - g) * a + g * b);
    return out;
}

NurbsPatch net_patch(const KnotVector& ku, const KnotVector& kv, const std::vector<Point>& south,
                     const std::vector<double>& w_south, const std::vector<Point>& north,
                     const std::vector<double>& w_north, const std::vector<Point>& west, const std::vector<Point>& east)
{
    const int nu = ku.n_basis(), nv = kv.n_basis();
    auto gv = kv.greville();
    std::vector<Point> cps(static_cast<size_t>(nu) * nv, Point::Zero());
    std::vector<double> w(cps.size());
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i)
            w[i + nu * j] = (1.0 - gv[j]) * w_south[i] + gv[j] * w_north[i];
    NurbsPatch p(ku, kv, std::move(cps), std::move(w));
    return coons_update(p, BoundaryNet{south, north, west, east});
}

} // namespace

MultiPatchDomain build_lens_domain(const DomainParams& dp, int q, const Refinement& ref)
{
    dp.validate();
    ref.validate();
    if (q < 1)
        throw DomainError("degree must be >= 1");
    const auto& e = ref.elements;
    const double L = dp.L, B = dp.B, K = dp.K, W = dp.W, S = dp.S, R = dp.R, Rt = dp.R + dp.P;

    NurbsCurve lower = lens_arc(R, W, K, q, e[0][0]);
    NurbsCurve upper = lens_arc(Rt, W, K, q, e[0][0]);
    const KnotVector kx = lower.knots;
    std::vector<double> ones(kx.n_basis(), 1.0);

    std::vector<NurbsPatch> patches;
    {
        KnotVector kv = KnotVector::uniform(q, e[0][1]);
        patches.push_back(net_patch(kx, kv, straight({0, 0}, {W, 0}, kx), ones, lower.points, lower.weights,
                                    straight({0, 0}, {0, R}, kv), straight({W, 0}, {W, K}, kv)));
    }
    patches.push_back(bilinear_patch({W, 0}, {B, 0}, {W, K}, {B, K}, q, q, e[1][0], e[1][1]));
    {
        KnotVector kv = KnotVector::uniform(q, e[2][1]);
        std::vector<Point> tip(kv.n_basis(), Point(W, K));
        patches.push_back(net_patch(kx, kv, lower.points, lower.weights, upper.points, upper.weights,
                                    straight({0, R}, {0, Rt}, kv), tip));
    }
    {
        KnotVector kv = KnotVector::uniform(q, e[3][1]);
        patches.push_back(net_patch(kx, kv, upper.points, upper.weights, straight({0, S}, {W, S}, kx), ones,
                                    straight({0, Rt}, {0, S}, kv), straight({W, K}, {W, S}, kv)));
    }
    patches.push_back(bilinear_patch({W, K}, {B, K}, {W, S}, {B, S}, q, q, e[4][0], e[4][1]));
    patches.push_back(bilinear_patch({0, S}, {W, S}, {0, L}, {W, L}, q, q, e[5][0], e[5][1]));
    patches.push_back(bilinear_patch({W, S}, {B, S}, {W, L}, {B, L}, q, q, e[6][0], e[6][1]));

    using T = BoundaryTag;
    // order: south, east, north, west
    std::vector<std::array<BoundaryTag, 4>> tags = {
        {T::Excitation, T::Interior, T::LensInterface, T::Symmetry},
        {T::Excitation, T::Absorbing, T::Interior, T::Interior},
        {T::LensInterface, T::Collapsed, T::LensInterface, T::Symmetry},
        {T::LensInterface, T::Interior, T::Interior, T::Symmetry},
        {T::Interior, T::Absorbing, T::Interior, T::Interior},
        {T::Interior, T::Interior, T::Absorbing, T::Symmetry},
        {T::Interior, T::Absorbing, T::Absorbing, T::Interior},
    };
    std::vector<Region> regions(7, Region::Fluid);
    regions[kLensPatch] = Region::Lens;
    std::vector<EdgeLink> links = {
        {0, Side::North, 2, Side::South}, {2, Side::North, 3, Side::South}, {0, Side::East, 1, Side::West},
        {1, Side::North, 4, Side::South}, {3, Side::East, 4, Side::West}, {3, Side::North, 5, Side::South},
        {4, Side::North, 6, Side::South}, {5, Side::East, 6, Side::West},
    };
    MultiPatchDomain dom(std::move(patches), std::move(regions), std::move(tags), std::move(links),
                         {{kLensPatch, Side::East}}, kLensPatch);
    dom.check_conformity(1e-12);
    return dom;
}

std::vector<int> LensShape::movable() const
{
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (!dofs[i].pinned)
            out.push_back(i);
    return out;
}

Eigen::VectorXd LensShape::y() const
{
    Eigen::VectorXd v(size());
    for (int i = 0; i < size(); ++i)
        v(i) = dofs[i].y;
    return v;
}

void LensShape::set_y(const Eigen::VectorXd& y)
{
    if (y.size() != size())
        throw DimensionError("shape vector length mismatch");
    for (int i = 0; i < size(); ++i)
        dofs[i].y = y(i);
}

LensShape design_dof_set(const MultiPatchDomain& domain, MovingSet moving)
{
    if (domain.lens_patch < 0)
        throw PreconditionError("domain has no lens patch");
    const int lp = domain.lens_patch;
    const NurbsPatch& lens = domain.patches[lp];
    const int nu = lens.n(0);
    const int tip = domain.dofs(lp, lens.index(nu - 1, 0));
    LensShape shape;
    std::set<int> seen;
    auto add_row = [&](Side s, LensBoundary which) {
        bool fixed = (moving == MovingSet::Upper && which == LensBoundary::Lower) ||
                     (moving == MovingSet::Lower && which == LensBoundary::Upper);
        for (int loc : lens.side_indices(s)) {
            int g = domain.dofs(lp, loc);
            if (!seen.insert(g).second)
                continue;
            const Point& P = lens.control_points()[loc];
            shape.dofs.push_back({g, which, P(0), P(1), fixed || g == tip});
        }
    };
    add_row(Side::North, LensBoundary::Upper);
    add_row(Side::South, LensBoundary::Lower);
    return shape;
}

} // namespace lensopt
