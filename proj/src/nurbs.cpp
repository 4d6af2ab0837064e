#include "lensopt/nurbs.hpp"
#include "lensopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

namespace lensopt {

KnotVector::KnotVector(std::vector<double> knots, int degree) : knots_(std::move(knots)), degree_(degree)
{
    if (degree_ < 1)
        throw DomainError("knot vector degree must be >= 1");
    const int m = static_cast<int>(knots_.size());
    if (m < 2 * (degree_ + 1))
        throw DomainError("knot vector too short for degree " + std::to_string(degree_));
    for (int i = 1; i < m; ++i)
        if (knots_[i] < knots_[i - 1])
            throw DomainError("knot vector must be non-decreasing");
    for (int i = 0; i <= degree_; ++i)
        if (knots_[i] != 0.0 || knots_[m - 1 - i] != 1.0)
            throw DomainError("knot vector must be open on [0,1]");
    int mult = 1;
    for (int i = degree_ + 2; i < m - degree_ - 1; ++i) {
        mult = knots_[i] == knots_[i - 1] ? mult + 1 : 1;
        if (mult > degree_)
            throw DomainError("interior knot multiplicity exceeds degree");
    }
}

KnotVector KnotVector::uniform(int degree, int n_elements)
{
    if (n_elements < 1)
        throw DomainError("element count must be >= 1");
    std::vector<double> k(degree + 1, 0.0);
    for (int e = 1; e < n_elements; ++e)
        k.push_back(static_cast<double>(e) / n_elements);
    k.insert(k.end(), degree + 1, 1.0);
    return KnotVector(std::move(k), degree);
}

std::vector<double> KnotVector::breakpoints() const
{
    std::vector<double> z;
    for (double k : knots_)
        if (z.empty() || k != z.back())
            z.push_back(k);
    return z;
}

int KnotVector::find_span(double x) const
{
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("parameter " + std::to_string(x) + " outside [0,1]");
    const int n = n_basis();
    if (x >= knots_[n])
        return n - 1;
    auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + n + 1, x);
    return static_cast<int>(it - knots_.begin()) - 1;
}

void KnotVector::eval_local(int span, double x, double* values, double* derivs) const
{
    const int p = degree_;
    const double* U = knots_.data();
    double left[32], right[32], N[32], Nlow[32];
    if (p >= 31)
        throw DomainError("degree too large");
    N[0] = 1.0;
    Nlow[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - U[span + 1 - j];
        right[j] = U[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            double temp = N[r] / (right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        N[j] = saved;
        if (j == p - 1)
            std::copy(N, N + p, Nlow);
    }
    for (int r = 0; r <= p; ++r)
        values[r] = N[r];
    if (!derivs)
        return;
    for (int r = 0; r <= p; ++r) {
        const int i = span - p + r;
        double d = 0.0;
        if (r >= 1) {
            double den = U[i + p] - U[i];
            if (den != 0.0)
                d += Nlow[r - 1] / den;
        }
        if (r <= p - 1) {
            double den = U[i + p + 1] - U[i + 1];
            if (den != 0.0)
                d -= Nlow[r] / den;
        }
        derivs[r] = p * d;
    }
}

std::vector<double> KnotVector::greville() const
{
    std::vector<double> g(n_basis());
    for (int i = 0; i < n_basis(); ++i) {
        double s = 0.0;
        for (int k = 1; k <= degree_; ++k)
            s += knots_[i + k];
        g[i] = s / degree_;
    }
    return g;
}

std::vector<double> KnotVector::missing_uniform_knots(int n_elements) const
{
    std::vector<double> out;
    auto z = breakpoints();
    for (int e = 1; e < n_elements; ++e) {
        double t = static_cast<double>(e) / n_elements;
        bool present = std::any_of(z.begin(), z.end(), [&](double k) { return std::abs(k - t) < 1e-14; });
        if (!present)
            out.push_back(t);
    }
    return out;
}

std::vector<double> eval_bspline_basis(const KnotVector& kv, double x)
{
    std::vector<double> out(kv.n_basis(), 0.0);
    int span = kv.find_span(x);
    double v[32];
    kv.eval_local(span, x, v, nullptr);
    for (int r = 0; r <= kv.degree(); ++r)
        out[span - kv.degree() + r] = v[r];
    return out;
}

std::vector<double> eval_bspline_deriv(const KnotVector& kv, double x)
{
    std::vector<double> out(kv.n_basis(), 0.0);
    int span = kv.find_span(x);
    double v[32], d[32];
    kv.eval_local(span, x, v, d);
    for (int r = 0; r <= kv.degree(); ++r)
        out[span - kv.degree() + r] = d[r];
    return out;
}

// ---------------------------------------------------------------------------

Point NurbsCurve::eval(double t) const
{
    const int p = knots.degree();
    int span = knots.find_span(t);
    double v[32];
    knots.eval_local(span, t, v, nullptr);
    Point num = Point::Zero();
    double den = 0.0;
    for (int r = 0; r <= p; ++r) {
        int i = span - p + r;
        num += v[r] * weights[i] * points[i];
        den += v[r] * weights[i];
    }
    return num / den;
}

Point NurbsCurve::derivative(double t) const
{
    const int p = knots.degree();
    int span = knots.find_span(t);
    double v[32], d[32];
    knots.eval_local(span, t, v, d);
    Point A = Point::Zero(), dA = Point::Zero();
    double W = 0.0, dW = 0.0;
    for (int r = 0; r <= p; ++r) {
        int i = span - p + r;
        A += v[r] * weights[i] * points[i];
        dA += d[r] * weights[i] * points[i];
        W += v[r] * weights[i];
        dW += d[r] * weights[i];
    }
    return (dA * W - A * dW) / (W * W);
}

NurbsCurve NurbsCurve::with_knot(double t) const
{
    const int p = knots.degree();
    const auto& U = knots.knots();
    const int n = knots.n_basis();
    int k = knots.find_span(t);
    if (t >= 1.0)
        throw DomainError("cannot insert knot at 1");
    std::vector<Eigen::Vector3d> P(n), Q(n + 1);
    for (int i = 0; i < n; ++i)
        P[i] << weights[i] * points[i], weights[i];
    for (int i = 0; i <= k - p; ++i)
        Q[i] = P[i];
    for (int i = k - p + 1; i <= k; ++i) {
        double a = (t - U[i]) / (U[i + p] - U[i]);
        Q[i] = a * P[i] + (1.0 - a) * P[i - 1];
    }
    for (int i = k + 1; i <= n; ++i)
        Q[i] = P[i - 1];
    std::vector<double> U2(U.begin(), U.begin() + k + 1);
    U2.push_back(t);
    U2.insert(U2.end(), U.begin() + k + 1, U.end());
    NurbsCurve out;
    out.knots = KnotVector(std::move(U2), p);
    out.points.resize(n + 1);
    out.weights.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        out.weights[i] = Q[i](2);
        out.points[i] = Q[i].head<2>() / Q[i](2);
    }
    return out;
}

NurbsCurve NurbsCurve::refined_uniform(int n_elements) const
{
    NurbsCurve c = *this;
    for (double t : knots.missing_uniform_knots(n_elements))
        c = c.with_knot(t);
    return c;
}

// ---------------------------------------------------------------------------

NurbsPatch::NurbsPatch(KnotVector ku, KnotVector kv, std::vector<Point> control_points, std::vector<double> weights)
    : ku_(std::move(ku)), kv_(std::move(kv)), cps_(std::move(control_points)), w_(std::move(weights))
{
    const size_t expected = static_cast<size_t>(ku_.n_basis()) * kv_.n_basis();
    if (cps_.size() != expected || w_.size() != expected)
        throw DimensionError("control net size does not match the tensor basis");
    for (double w : w_)
        if (!(w > 0.0))
            throw DomainError("NURBS weights must be positive");
}

void NurbsPatch::check_param(const Point& xhat) const
{
    if (!(xhat(0) >= 0.0 && xhat(0) <= 1.0 && xhat(1) >= 0.0 && xhat(1) <= 1.0))
        throw DomainError("parametric point outside [0,1]^2");
}

void NurbsPatch::eval_basis(const Point& xhat, BasisValues& out) const
{
    check_param(xhat);
    const int pu = ku_.degree(), pv = kv_.degree();
    const int su = ku_.find_span(xhat(0)), sv = kv_.find_span(xhat(1));
    double Nu[32], dNu[32], Nv[32], dNv[32];
    ku_.eval_local(su, xhat(0), Nu, dNu);
    kv_.eval_local(sv, xhat(1), Nv, dNv);
    const int nloc = (pu + 1) * (pv + 1);
    out.index.resize(nloc);
    out.value.resize(nloc);
    out.grad.resize(nloc);
    double W = 0.0, Wu = 0.0, Wv = 0.0;
    int a = 0;
    for (int b = 0; b <= pv; ++b)
        for (int c = 0; c <= pu; ++c, ++a) {
            int idx = index(su - pu + c, sv - pv + b);
            double w = w_[idx];
            out.index[a] = idx;
            out.value[a] = w * Nu[c] * Nv[b];
            out.grad[a] = Point(w * dNu[c] * Nv[b], w * Nu[c] * dNv[b]);
            W += out.value[a];
            Wu += out.grad[a](0);
            Wv += out.grad[a](1);
        }
    const double inv = 1.0 / W;
    for (int k = 0; k < nloc; ++k) {
        double r = out.value[k] * inv;
        out.grad[k] = Point((out.grad[k](0) - r * Wu) * inv, (out.grad[k](1) - r * Wv) * inv);
        out.value[k] = r;
    }
}

BasisValues NurbsPatch::eval_basis(const Point& xhat) const
{
    BasisValues b;
    eval_basis(xhat, b);
    return b;
}

Point NurbsPatch::map(const Point& xhat) const
{
    BasisValues b;
    eval_basis(xhat, b);
    Point x = Point::Zero();
    for (size_t k = 0; k < b.index.size(); ++k)
        x += b.value[k] * cps_[b.index[k]];
    return x;
}

GeometryEval NurbsPatch::eval_geometry_unchecked(const Point& xhat) const
{
    BasisValues b;
    eval_basis(xhat, b);
    GeometryEval g;
    g.point.setZero();
    g.jacobian.setZero();
    for (size_t k = 0; k < b.index.size(); ++k) {
        const Point& P = cps_[b.index[k]];
        g.point += b.value[k] * P;
        g.jacobian += P * b.grad[k].transpose();
    }
    g.det = g.jacobian.determinant();
    return g;
}

GeometryEval NurbsPatch::eval_geometry(const Point& xhat, int patch_id) const
{
    GeometryEval g = eval_geometry_unchecked(xhat);
    if (!(g.det > 0.0))
        throw DegenerateGeometryError(patch_id, xhat(0), xhat(1), g.det);
    return g;
}

std::vector<int> NurbsPatch::side_indices(Side s) const
{
    std::vector<int> out;
    const int nu = n(0), nv = n(1);
    switch (s) {
    case Side::South:
        for (int i = 0; i < nu; ++i) out.push_back(index(i, 0));
        break;
    case Side::North:
        for (int i = 0; i < nu; ++i) out.push_back(index(i, nv - 1));
        break;
    case Side::West:
        for (int j = 0; j < nv; ++j) out.push_back(index(0, j));
        break;
    case Side::East:
        for (int j = 0; j < nv; ++j) out.push_back(index(nu - 1, j));
        break;
    }
    return out;
}

NurbsCurve NurbsPatch::side_curve(Side s) const
{
    NurbsCurve c;
    c.knots = (s == Side::South || s == Side::North) ? ku_ : kv_;
    for (int idx : side_indices(s)) {
        c.points.push_back(cps_[idx]);
        c.weights.push_back(w_[idx]);
    }
    return c;
}

namespace {
std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

std::string NurbsPatch::serialize() const
{
    std::ostringstream os;
    os << "nurbs_patch\n";
    os << "degree " << ku_.degree() << ' ' << kv_.degree() << '\n';
    for (int d = 0; d < 2; ++d) {
        os << (d == 0 ? "knots_u " : "knots_v ") << knots(d).knots().size();
        for (double k : knots(d).knots())
            os << ' ' << fmt17(k);
        os << '\n';
    }
    os << "net " << n(0) << ' ' << n(1) << '\n';
    for (size_t k = 0; k < cps_.size(); ++k)
        os << fmt17(cps_[k](0)) << ' ' << fmt17(cps_[k](1)) << ' ' << fmt17(w_[k]) << '\n';
    os << "end\n";
    return os.str();
}

NurbsPatch NurbsPatch::deserialize(std::istream& in)
{
    auto expect = [&](const std::string& word) {
        std::string tok;
        if (!(in >> tok) || tok != word)
            throw ConfigError("patch record: expected '" + word + "', got '" + tok + "'");
    };
    auto read_double = [&]() {
        std::string tok;
        if (!(in >> tok))
            throw ConfigError("patch record: unexpected end of input");
        return std::strtod(tok.c_str(), nullptr);
    };
    expect("nurbs_patch");
    expect("degree");
    int pu, pv;
    in >> pu >> pv;
    std::vector<double> k[2];
    for (int d = 0; d < 2; ++d) {
        expect(d == 0 ? "knots_u" : "knots_v");
        size_t m;
        in >> m;
        k[d].resize(m);
        for (auto& x : k[d])
            x = read_double();
    }
    expect("net");
    int nu, nv;
    in >> nu >> nv;
    if (!in)
        throw ConfigError("patch record: malformed header");
    std::vector<Point> cps(static_cast<size_t>(nu) * nv);
    std::vector<double> w(cps.size());
    for (size_t i = 0; i < cps.size(); ++i) {
        cps[i](0) = read_double();
        cps[i](1) = read_double();
        w[i] = read_double();
    }
    expect("end");
    NurbsPatch p(KnotVector(k[0], pu), KnotVector(k[1], pv), std::move(cps), std::move(w));
    if (p.n(0) != nu || p.n(1) != nv)
        throw ConfigError("patch record: net size does not match knots");
    return p;
}

NurbsPatch NurbsPatch::deserialize(const std::string& text)
{
    std::istringstream is(text);
    return deserialize(is);
}

bool NurbsPatch::operator==(const NurbsPatch& o) const
{
    if (!(ku_ == o.ku_ && kv_ == o.kv_) || w_ != o.w_)
        return false;
    for (size_t i = 0; i < cps_.size(); ++i)
        if (cps_[i] != o.cps_[i])
            return false;
    return true;
}

NurbsPatch bilinear_patch(const Point& ll, const Point& lr, const Point& ul, const Point& ur, int degree_u,
                          int degree_v, int n_el_u, int n_el_v)
{
    KnotVector ku = KnotVector::uniform(degree_u, n_el_u), kv = KnotVector::uniform(degree_v, n_el_v);
    auto gu = ku.greville(), gv = kv.greville();
    std::vector<Point> cps;
    for (double t : gv)
        for (double s : gu)
            cps.push_back((1 - s) * (1 - t) * ll + s * (1 - t) * lr + (1 - s) * t * ul + s * t * ur);
    std::vector<double> w(cps.size(), 1.0);
    return NurbsPatch(std::move(ku), std::move(kv), std::move(cps), std::move(w));
}

} // namespace lensopt
