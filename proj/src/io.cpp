#include "lensopt/io.hpp"
#include "lensopt/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lensopt {

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path, bool binary = false)
{
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

constexpr char kMagic[4] = {'L', 'O', 'T', 'S'};
constexpr std::uint32_t kFormat = 1;

} // namespace

std::string field_csv(const MultiPatchDomain& domain, const Eigen::VectorXd& coeffs)
{
    if (coeffs.size() != domain.n_global())
        throw DimensionError("field has " + std::to_string(coeffs.size()) + " entries, domain has " +
                             std::to_string(domain.n_global()) + " dofs");
    std::ostringstream os;
    os << "patch,i1,i2,x,y,value\n";
    for (int p = 0; p < domain.n_patches(); ++p) {
        const NurbsPatch& P = domain.patches[p];
        for (int j = 0; j < P.n(1); ++j)
            for (int i = 0; i < P.n(0); ++i) {
                const Point& x = P.control_point(i, j);
                os << p << ',' << i << ',' << j << ',' << fmt(x(0)) << ',' << fmt(x(1)) << ','
                   << fmt(coeffs(domain.dofs(p, P.index(i, j)))) << '\n';
            }
    }
    return os.str();
}

void write_field_csv(const std::string& path, const MultiPatchDomain& domain, const Eigen::VectorXd& coeffs)
{
    write_text(path, field_csv(domain, coeffs));
}

void write_time_series(const std::string& path, const TimeSeriesField& f)
{
    auto out = open_out(path, true);
    const std::uint32_t ver = kFormat;
    const std::int64_t n = f.n_dofs(), s = f.n_steps();
    const double T = f.grid.T_final;
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&s), sizeof s);
    out.write(reinterpret_cast<const char*>(&T), sizeof T);
    for (const Eigen::MatrixXd* m : {&f.value, &f.rate, &f.accel})
        out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(sizeof(double) * n * s));
    if (!out)
        throw ConfigError("failed writing '" + path + "'");
}

void write_time_series_csv(const std::string& path, const TimeSeriesField& f)
{
    auto out = open_out(path);
    out << "# T_final=" << fmt(f.grid.T_final) << " n_steps=" << f.n_steps() << " n_dofs=" << f.n_dofs() << '\n';
    out << "step,t,dof,value,rate,accel\n";
    for (int s = 0; s < f.n_steps(); ++s)
        for (int i = 0; i < f.n_dofs(); ++i)
            out << s << ',' << fmt(f.grid.t(s)) << ',' << i << ',' << fmt(f.value(i, s)) << ',' << fmt(f.rate(i, s))
                << ',' << fmt(f.accel(i, s)) << '\n';
}

TimeSeriesField read_time_series(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (in && std::memcmp(magic, kMagic, 4) == 0) {
        std::uint32_t ver = 0;
        std::int64_t n = 0, s = 0;
        double T = 0.0;
        in.read(reinterpret_cast<char*>(&ver), sizeof ver);
        in.read(reinterpret_cast<char*>(&n), sizeof n);
        in.read(reinterpret_cast<char*>(&s), sizeof s);
        in.read(reinterpret_cast<char*>(&T), sizeof T);
        if (!in || ver != kFormat || n < 0 || s < 2)
            throw ConfigError("'" + path + "' has a corrupt time series header");
        TimeSeriesField f = TimeSeriesField::zeros(static_cast<int>(n), TimeGrid{T, static_cast<int>(s)});
        for (Eigen::MatrixXd* m : {&f.value, &f.rate, &f.accel})
            in.read(reinterpret_cast<char*>(m->data()), static_cast<std::streamsize>(sizeof(double) * n * s));
        if (!in)
            throw ConfigError("'" + path + "' is truncated");
        return f;
    }
    in.clear();
    in.seekg(0);
    std::string line;
    std::getline(in, line);
    double T = 0.0;
    int s = 0, n = 0;
    if (std::sscanf(line.c_str(), "# T_final=%lf n_steps=%d n_dofs=%d", &T, &s, &n) != 3)
        throw ConfigError("'" + path + "' is neither a binary nor a CSV time series");
    std::getline(in, line);
    TimeSeriesField f = TimeSeriesField::zeros(n, TimeGrid{T, s});
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        int step, dof;
        double t, v, r, a;
        if (std::sscanf(line.c_str(), "%d,%lf,%d,%lf,%lf,%lf", &step, &t, &dof, &v, &r, &a) != 6 || step < 0 ||
            step >= s || dof < 0 || dof >= n)
            throw ConfigError("malformed time series row in '" + path + "': " + line);
        f.value(dof, step) = v;
        f.rate(dof, step) = r;
        f.accel(dof, step) = a;
    }
    return f;
}

std::string history_csv(const OptimizationHistory& h)
{
    std::ostringstream os;
    os << "step,J,J/J0,gradnorm,gradnorm/gradnorm0,alpha,accepted,repeats,shape_error_l2\n";
    for (const auto& r : h.steps)
        os << r.step << ',' << fmt(r.J) << ',' << fmt(r.J_rel) << ',' << fmt(r.gradnorm) << ','
           << fmt(r.gradnorm_rel) << ',' << fmt(r.alpha) << ',' << (r.accepted ? 1 : 0) << ',' << r.repeats << ','
           << (r.shape_error >= 0.0 ? fmt(r.shape_error) : std::string()) << '\n';
    return os.str();
}

void write_history_csv(const std::string& path, const OptimizationHistory& h) { write_text(path, history_csv(h)); }

void write_gradient_csv(const std::string& path, const LensShape& shape, const Eigen::VectorXd& g)
{
    if (g.size() != shape.size())
        throw DimensionError("gradient and shape sizes differ");
    auto out = open_out(path);
    out << "dof,global,x,y,gradient\n";
    for (int i = 0; i < shape.size(); ++i) {
        const auto& d = shape.dofs[i];
        out << i << ',' << d.global << ',' << fmt(d.x) << ',' << fmt(d.y) << ',' << fmt(g(i)) << '\n';
    }
}

void write_shape_csv(const std::string& path, const LensShape& shape)
{
    auto out = open_out(path);
    out << "dof,global,boundary,x,y,pinned\n";
    for (int i = 0; i < shape.size(); ++i) {
        const auto& d = shape.dofs[i];
        out << i << ',' << d.global << ',' << (d.boundary == LensBoundary::Upper ? "upper" : "lower") << ','
            << fmt(d.x) << ',' << fmt(d.y) << ',' << (d.pinned ? 1 : 0) << '\n';
    }
}

double eval_at_point(const MultiPatchDomain& domain, const Eigen::VectorXd& coeffs, const Point& x)
{
    if (coeffs.size() != domain.n_global())
        throw DimensionError("coefficient vector does not match the domain");
    for (int p = 0; p < domain.n_patches(); ++p) {
        const NurbsPatch& P = domain.patches[p];
        Point xh(0.5, 0.5);
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            const GeometryEval g = P.eval_geometry_unchecked(xh);
            const Point r = g.point - x;
            if (r.norm() < 1e-12 * (1.0 + x.norm())) {
                ok = true;
                break;
            }
            if (std::abs(g.det) < 1e-300)
                break;
            xh -= g.jacobian.inverse() * r;
            xh = xh.cwiseMax(0.0).cwiseMin(1.0);
        }
        if (!ok)
            continue;
        const BasisValues b = P.eval_basis(xh);
        double v = 0.0;
        for (size_t k = 0; k < b.index.size(); ++k)
            v += b.value[k] * coeffs(domain.dofs(p, b.index[k]));
        return v;
    }
    throw DomainError("point outside the computational domain");
}

void write_probe_csv(const std::string& path, const MultiPatchDomain& domain, const TimeSeriesField& f,
                     const std::vector<Point>& probes)
{
    auto out = open_out(path);
    out << 't';
    for (size_t k = 0; k < probes.size(); ++k)
        out << ",u" << k;
    out << '\n';
    for (int s = 0; s < f.n_steps(); ++s) {
        out << fmt(f.grid.t(s));
        const Eigen::VectorXd u = f.value.col(s);
        for (const auto& p : probes)
            out << ',' << fmt(eval_at_point(domain, u, p));
        out << '\n';
    }
}

void write_text(const std::string& path, const std::string& text)
{
    auto out = open_out(path);
    out << text;
    if (!out)
        throw ConfigError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace lensopt
