#include "lensopt/assembly.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

namespace lensopt {

void MaterialParams::validate() const
{
    if (!(c > 0.0) || !(rho > 0.0) || !(b >= 0.0) || !std::isfinite(k()))
        throw ConfigError("material parameters must satisfy c > 0, rho > 0, b >= 0 with finite k");
}

Box Box::of_patch(const NurbsPatch& patch)
{
    Box b{1e300, -1e300, 1e300, -1e300};
    for (const auto& p : patch.control_points()) {
        b.x0 = std::min(b.x0, p(0));
        b.x1 = std::max(b.x1, p(0));
        b.y0 = std::min(b.y0, p(1));
        b.y1 = std::max(b.y1, p(1));
    }
    return b;
}

double Excitation::omega() const { return 2.0 * M_PI * frequency; }

std::pair<double, double> excitation(double t, double g0, double omega)
{
    const double a = omega * t / 8.0;
    const double env = std::exp(-a * a);
    const double s = std::sin(omega * t), c = std::cos(omega * t);
    const double g = g0 * env * s;
    const double dg = g0 * env * (omega * c - 2.0 * a * (omega / 8.0) * s);
    return {g, dg};
}

namespace {

const Point kParamNormal[4] = {Point(0, -1), Point(1, 0), Point(0, 1), Point(-1, 0)};

void append(QuadCache& q, const NurbsPatch& p, int pid, const DofMap& dofs, const Point& xhat, double weight,
            BasisValues& b, int side, bool check_det)
{
    p.eval_basis(xhat, b);
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    Point x = Point::Zero();
    const auto& cps = p.control_points();
    for (size_t k = 0; k < b.index.size(); ++k) {
        x += b.value[k] * cps[b.index[k]];
        J += cps[b.index[k]] * b.grad[k].transpose();
    }
    const double det = J.determinant();
    if (check_det && !(det > 0.0))
        throw DegenerateGeometryError(pid, xhat(0), xhat(1), det);
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    for (size_t k = 0; k < b.index.size(); ++k) {
        q.dof.push_back(dofs(pid, b.index[k]));
        q.ldof.push_back(dofs.offsets[pid] + b.index[k]);
        q.val.push_back(b.value[k]);
        q.grad.push_back(JinvT * b.grad[k]);
    }
    q.offset.push_back(static_cast<int>(q.val.size()));
    if (side < 0) {
        q.wdet.push_back(weight * std::abs(det));
    } else {
        Point n = JinvT * kParamNormal[side];
        const double nn = n.norm();
        q.wdet.push_back(weight * nn * std::abs(det));
        q.normal.push_back(n / nn);
        q.side.push_back(side);
    }
    q.x.push_back(x);
    q.xhat.push_back(xhat);
    q.patch.push_back(pid);
}

int rule_size(const NurbsPatch& p, int n_points)
{
    return n_points > 0 ? n_points : std::max(p.degree(0), p.degree(1)) + 1;
}

} // namespace

void QuadCache::append_point(const NurbsPatch& p, int patch_id, const DofMap& dofs, const Point& xh, double weight,
                             BasisValues& scratch, bool check_det)
{
    append(*this, p, patch_id, dofs, xh, weight, scratch, -1, check_det);
}

QuadCache volume_quadrature(const MultiPatchDomain& domain, int n_points)
{
    QuadCache q;
    BasisValues b;
    for (int pid = 0; pid < domain.n_patches(); ++pid) {
        const NurbsPatch& p = domain.patches[pid];
        const QuadRule1D& r = gauss_legendre(rule_size(p, n_points));
        auto zu = p.knots(0).breakpoints(), zv = p.knots(1).breakpoints();
        for (size_t ev = 0; ev + 1 < zv.size(); ++ev)
            for (size_t eu = 0; eu + 1 < zu.size(); ++eu) {
                const double du = zu[eu + 1] - zu[eu], dv = zv[ev + 1] - zv[ev];
                for (size_t j = 0; j < r.nodes.size(); ++j)
                    for (size_t i = 0; i < r.nodes.size(); ++i) {
                        Point xh(zu[eu] + du * r.nodes[i], zv[ev] + dv * r.nodes[j]);
                        append(q, p, pid, domain.dofs, xh, r.weights[i] * r.weights[j] * du * dv, b, -1, true);
                    }
                q.elem_offset.push_back(q.n_points());
            }
    }
    return q;
}

QuadCache boundary_quadrature(const MultiPatchDomain& domain, BoundaryTag tag, int n_points)
{
    QuadCache q;
    BasisValues b;
    for (int pid = 0; pid < domain.n_patches(); ++pid) {
        const NurbsPatch& p = domain.patches[pid];
        const QuadRule1D& r = gauss_legendre(rule_size(p, n_points));
        for (int s = 0; s < 4; ++s) {
            if (domain.tags[pid][s] == BoundaryTag::Untagged)
                throw ConfigError("patch " + std::to_string(pid) + " side " + to_string(static_cast<Side>(s)) +
                                  " has no boundary tag");
            if (domain.tags[pid][s] != tag)
                continue;
            const int dir = (s == 0 || s == 2) ? 0 : 1;
            const double fixed = (s == 1 || s == 2) ? 1.0 : 0.0;
            auto z = p.knots(dir).breakpoints();
            for (size_t e = 0; e + 1 < z.size(); ++e) {
                const double h = z[e + 1] - z[e];
                for (size_t i = 0; i < r.nodes.size(); ++i) {
                    const double t = z[e] + h * r.nodes[i];
                    Point xh = dir == 0 ? Point(t, fixed) : Point(fixed, t);
                    append(q, p, pid, domain.dofs, xh, r.weights[i] * h, b, s, true);
                }
                q.elem_offset.push_back(q.n_points());
            }
        }
    }
    return q;
}

QuadCache tracking_quadrature(const MultiPatchDomain& domain, const Box& D, int n_points, int subdivisions)
{
    QuadCache q;
    if (D.empty())
        return q;
    BasisValues b;
    const int ns = 5;
    for (int pid = 0; pid < domain.n_patches(); ++pid) {
        const NurbsPatch& p = domain.patches[pid];
        const QuadRule1D& r = gauss_legendre(rule_size(p, n_points));
        auto zu = p.knots(0).breakpoints(), zv = p.knots(1).breakpoints();
        for (size_t ev = 0; ev + 1 < zv.size(); ++ev)
            for (size_t eu = 0; eu + 1 < zu.size(); ++eu) {
                const double du = zu[eu + 1] - zu[eu], dv = zv[ev + 1] - zv[ev];
                int inside = 0;
                Box bb{1e300, -1e300, 1e300, -1e300};
                for (int j = 0; j < ns; ++j)
                    for (int i = 0; i < ns; ++i) {
                        Point x = p.map(Point(zu[eu] + du * i / (ns - 1.0), zv[ev] + dv * j / (ns - 1.0)));
                        inside += D.contains(x);
                        bb.x0 = std::min(bb.x0, x(0));
                        bb.x1 = std::max(bb.x1, x(0));
                        bb.y0 = std::min(bb.y0, x(1));
                        bb.y1 = std::max(bb.y1, x(1));
                    }
                const bool touches = bb.x1 >= D.x0 && bb.x0 <= D.x1 && bb.y1 >= D.y0 && bb.y0 <= D.y1;
                if (inside == 0 && !touches)
                    continue;
                const int before = q.n_points();
                const int sub = inside == ns * ns ? 1 : subdivisions;
                for (int sj = 0; sj < sub; ++sj)
                    for (int si = 0; si < sub; ++si) {
                        const double u0 = zu[eu] + du * si / sub, v0 = zv[ev] + dv * sj / sub;
                        const double hu = du / sub, hv = dv / sub;
                        for (size_t j = 0; j < r.nodes.size(); ++j)
                            for (size_t i = 0; i < r.nodes.size(); ++i) {
                                Point xh(u0 + hu * r.nodes[i], v0 + hv * r.nodes[j]);
                                if (sub > 1 && !D.contains(p.map(xh)))
                                    continue;
                                append(q, p, pid, domain.dofs, xh, r.weights[i] * r.weights[j] * hu * hv, b, -1, true);
                            }
                    }
                if (q.n_points() > before)
                    q.elem_offset.push_back(q.n_points());
            }
    }
    return q;
}

// ---------------------------------------------------------------------------

TensorOperator::TensorOperator(std::shared_ptr<const QuadCache> cache, std::vector<double> two_k, int n_global,
                               int workers)
    : cache_(std::move(cache)), two_k_(std::move(two_k)), n_(n_global), workers_(std::max(1, workers))
{
    if (static_cast<int>(two_k_.size()) != cache_->n_points())
        throw DimensionError("tensor coefficient count must match quadrature points");
}

void TensorOperator::point_scalars(int e0, int e1, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                   std::vector<double>& s) const
{
    const QuadCache& q = *cache_;
    for (int k = q.elem_offset[e0]; k < q.elem_offset[e1]; ++k) {
        double uq = 0.0, vq = 0.0;
        for (int a = q.offset[k]; a < q.offset[k + 1]; ++a) {
            uq += q.val[a] * u[q.dof[a]];
            vq += q.val[a] * v[q.dof[a]];
        }
        s[k] = two_k_[k] * q.wdet[k] * uq * vq;
    }
}

Eigen::VectorXd TensorOperator::apply(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const
{
    if (u.size() != n_ || v.size() != n_)
        throw DimensionError("tensor application: vector length " + std::to_string(u.size()) + "/" +
                             std::to_string(v.size()) + " does not match " + std::to_string(n_));
    const QuadCache& q = *cache_;
    const int ne = q.n_elements();
    std::vector<double> s(q.n_points(), 0.0);
    const int w = std::min(workers_, std::max(1, ne));
    if (w == 1) {
        point_scalars(0, ne, u, v, s);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < w; ++t) {
            const int e0 = static_cast<int>(static_cast<long>(ne) * t / w);
            const int e1 = static_cast<int>(static_cast<long>(ne) * (t + 1) / w);
            threads.emplace_back([&, e0, e1] { point_scalars(e0, e1, u, v, s); });
        }
        for (auto& th : threads)
            th.join();
    }
    // serial scatter keeps the summation order independent of the worker count
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int k = 0; k < q.n_points(); ++k) {
        if (s[k] == 0.0)
            continue;
        for (int a = q.offset[k]; a < q.offset[k + 1]; ++a)
            out[q.dof[a]] += s[k] * q.val[a];
    }
    return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd AssembledSystem::load_at(double t) const
{
    if (!source || load_shape.size() == 0)
        return Eigen::VectorXd::Zero(n);
    return source(t) * load_shape;
}

Eigen::VectorXd AssembledSystem::apply_tensor(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const
{
    if (!tensor) {
        if (u.size() != n || v.size() != n)
            throw DimensionError("tensor application: vector length mismatch");
        return Eigen::VectorXd::Zero(n);
    }
    return tensor->apply(u, v);
}

void AssembledSystem::validate() const
{
    auto check = [&](const SpMat& m, const char* name) {
        if (m.rows() != n || m.cols() != n)
            throw DimensionError(std::string("matrix ") + name + " has wrong size");
    };
    check(M, "M");
    check(C, "C");
    check(K, "K");
    check(A1, "A1");
    check(A2, "A2");
    check(MD, "MD");
    if (load_shape.size() != 0 && load_shape.size() != n)
        throw DimensionError("load vector has wrong size");
}

// ---------------------------------------------------------------------------

Assembler::Assembler(const MultiPatchDomain& domain, const Materials& materials, AssemblyOptions opts)
    : domain_(domain), materials_(materials), opts_(opts)
{
    materials_.fluid.validate();
    materials_.lens.validate();
    volume_ = std::make_shared<QuadCache>(volume_quadrature(domain_, opts_.quad_points));
}

double Assembler::coefficient(Kind kind, int qp) const
{
    const MaterialParams& m = materials_.of(domain_.regions[volume_->patch[qp]]);
    switch (kind) {
    case Kind::Mass: return 1.0;
    case Kind::Damping: return m.b;
    case Kind::Stiffness: return m.c * m.c;
    }
    return 0.0;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SpMat from_triplets(int n, const Triplets& t)
{
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

// Element-wise mass-type matrix of a cache: sum w * coef(qp) * N_a N_b.
template <class Coef>
void mass_like(const QuadCache& q, bool local, Coef coef, Triplets& out)
{
    std::vector<double> Ke;
    for (int e = 0; e < q.n_elements(); ++e) {
        const int k0 = q.elem_offset[e], k1 = q.elem_offset[e + 1];
        if (k0 == k1)
            continue;
        const int a0 = q.offset[k0], nb = q.offset[k0 + 1] - a0;
        Ke.assign(static_cast<size_t>(nb) * nb, 0.0);
        for (int k = k0; k < k1; ++k) {
            const int o = q.offset[k];
            const double w = q.wdet[k] * coef(k);
            for (int a = 0; a < nb; ++a)
                for (int b = 0; b < nb; ++b)
                    Ke[a * nb + b] += w * q.val[o + a] * q.val[o + b];
        }
        const auto& idx = local ? q.ldof : q.dof;
        for (int a = 0; a < nb; ++a)
            for (int b = 0; b < nb; ++b)
                out.emplace_back(idx[a0 + a], idx[a0 + b], Ke[a * nb + b]);
    }
}

} // namespace

SpMat Assembler::assemble(Kind kind, bool local) const
{
    const QuadCache& q = *volume_;
    Triplets t;
    t.reserve(static_cast<size_t>(q.n_elements()) * 81);
    if (kind == Kind::Mass) {
        mass_like(q, local, [](int) { return 1.0; }, t);
    } else {
        std::vector<double> Ke;
        for (int e = 0; e < q.n_elements(); ++e) {
            const int k0 = q.elem_offset[e], k1 = q.elem_offset[e + 1];
            const int a0 = q.offset[k0], nb = q.offset[k0 + 1] - a0;
            Ke.assign(static_cast<size_t>(nb) * nb, 0.0);
            for (int k = k0; k < k1; ++k) {
                const int o = q.offset[k];
                const double w = q.wdet[k] * coefficient(kind, k);
                for (int a = 0; a < nb; ++a)
                    for (int b = 0; b < nb; ++b)
                        Ke[a * nb + b] += w * q.grad[o + a].dot(q.grad[o + b]);
            }
            const auto& idx = local ? q.ldof : q.dof;
            for (int a = 0; a < nb; ++a)
                for (int b = 0; b < nb; ++b)
                    t.emplace_back(idx[a0 + a], idx[a0 + b], Ke[a * nb + b]);
        }
    }
    const int n = local ? domain_.dofs.n_local_total() : domain_.n_global();
    return from_triplets(n, t);
}

SpMat Assembler::mass() const { return assemble(Kind::Mass, false); }
SpMat Assembler::damping() const { return assemble(Kind::Damping, false); }
SpMat Assembler::stiffness() const { return assemble(Kind::Stiffness, false); }
SpMat Assembler::local_mass() const { return assemble(Kind::Mass, true); }
SpMat Assembler::local_stiffness() const { return assemble(Kind::Stiffness, true); }

std::pair<SpMat, SpMat> Assembler::absorbing() const
{
    QuadCache q = boundary_quadrature(domain_, BoundaryTag::Absorbing, opts_.quad_points);
    Triplets t;
    mass_like(q, false, [](int) { return 1.0; }, t);
    SpMat base = from_triplets(domain_.n_global(), t);
    const double cf = materials_.fluid.c, bf = materials_.fluid.b;
    SpMat A1 = cf * base;
    SpMat A2 = (bf / cf) * base;
    return {A1, A2};
}

SpMat Assembler::tracking_mass(const Box& D) const
{
    if (D.empty()) {
        std::cerr << "warning: tracking region is empty, tracking mass is zero\n";
        return SpMat(domain_.n_global(), domain_.n_global());
    }
    QuadCache q = tracking_quadrature(domain_, D, opts_.quad_points, opts_.track_subdivisions);
    if (q.n_points() == 0)
        std::cerr << "warning: tracking region does not intersect the domain, tracking mass is zero\n";
    Triplets t;
    mass_like(q, false, [](int) { return 1.0; }, t);
    return from_triplets(domain_.n_global(), t);
}

Eigen::VectorXd Assembler::load_shape() const
{
    QuadCache q = boundary_quadrature(domain_, BoundaryTag::Excitation, opts_.quad_points);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(domain_.n_global());
    for (int k = 0; k < q.n_points(); ++k)
        for (int a = q.offset[k]; a < q.offset[k + 1]; ++a)
            f[q.dof[a]] += q.wdet[k] * q.val[a];
    return f;
}

std::shared_ptr<TensorOperator> Assembler::tensor() const
{
    std::vector<double> two_k(volume_->n_points());
    for (int k = 0; k < volume_->n_points(); ++k)
        two_k[k] = 2.0 * materials_.of(domain_.regions[volume_->patch[k]]).k();
    return std::make_shared<TensorOperator>(volume_, std::move(two_k), domain_.n_global(), opts_.workers);
}

AssembledSystem Assembler::system(const Excitation& exc, const Box& D) const
{
    AssembledSystem s;
    s.n = domain_.n_global();
    s.M = mass();
    s.C = damping();
    s.K = stiffness();
    std::tie(s.A1, s.A2) = absorbing();
    s.MD = tracking_mass(D);
    s.load_shape = load_shape();
    const double cf2 = materials_.fluid.c * materials_.fluid.c, bf = materials_.fluid.b;
    const double g0 = exc.g0, w = exc.omega();
    s.source = [cf2, bf, g0, w](double t) {
        auto [g, dg] = excitation(t, g0, w);
        return cf2 * g + bf * dg;
    };
    s.tensor = tensor();
    return s;
}

SpMat assemble_mass(const MultiPatchDomain& d, const Materials& m) { return Assembler(d, m).mass(); }
SpMat assemble_damping(const MultiPatchDomain& d, const Materials& m) { return Assembler(d, m).damping(); }
SpMat assemble_stiffness(const MultiPatchDomain& d, const Materials& m) { return Assembler(d, m).stiffness(); }
std::pair<SpMat, SpMat> assemble_boundary(const MultiPatchDomain& d, const Materials& m)
{
    return Assembler(d, m).absorbing();
}
SpMat assemble_tracking_mass(const MultiPatchDomain& d, const Box& D) { return Assembler(d, Materials{}).tracking_mass(D); }
Eigen::VectorXd apply_tensor(const MultiPatchDomain& d, const Materials& m, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& v)
{
    return Assembler(d, m).tensor()->apply(u, v);
}

std::string export_matrix_coo(const SpMat& m)
{
    std::ostringstream os;
    char buf[96];
    for (int r = 0; r < m.outerSize(); ++r)
        for (SpMat::InnerIterator it(m, r); it; ++it) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()), static_cast<int>(it.col()),
                          it.value());
            os << buf;
        }
    return os.str();
}

} // namespace lensopt
