#include "lensopt/runner.hpp"
#include "lensopt/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace lensopt {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
public:
    double lap()
    {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - t_).count();
        t_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

std::string prepare_dir(const RunConfig& cfg)
{
    fs::create_directories(cfg.output.dir);
    return cfg.output.dir;
}

std::string series_name(const RunConfig& cfg, const std::string& stem)
{
    return stem + (cfg.output.binary ? ".lots" : ".csv");
}

void write_series(const RunConfig& cfg, const std::string& path, const TimeSeriesField& f)
{
    if (cfg.output.binary)
        write_time_series(path, f);
    else
        write_time_series_csv(path, f);
}

Manifest finish(Manifest m, const std::string& dir)
{
    m.artifacts.push_back("manifest.json");
    write_text((fs::path(dir) / "manifest.json").string(), manifest_json(m).dump(2) + "\n");
    return m;
}

} // namespace

RunConfig effective_config(const RunConfig& cfg, const RunOptions& opts)
{
    RunConfig c = cfg;
    if (!opts.out_dir.empty())
        c.output.dir = opts.out_dir;
    if (opts.workers > 0)
        c.workers = opts.workers;
    if (opts.deterministic)
        c.workers = 1;
    if (opts.snapshot_every >= 0)
        c.output.snapshot_every = opts.snapshot_every;
    c.validate();
    return c;
}

TargetField resolve_target(const RunConfig& cfg, const Problem& problem)
{
    if (cfg.target_kind == TargetKind::Gaussian)
        return cfg.gaussian;
    if (!cfg.target_path.empty())
        return StoredTarget{read_time_series(cfg.target_path)};
    return StoredTarget{make_synthetic_target(problem, cfg.goal_params(), cfg.synthetic)};
}

std::optional<LensShape> goal_shape(const RunConfig& cfg)
{
    if (!cfg.goal.enabled)
        return std::nullopt;
    const MultiPatchDomain g = build_lens_domain(cfg.goal_params(), cfg.degree, cfg.refinement());
    return design_dof_set(g, cfg.moving);
}

double GradcheckReport::max_rel_error() const
{
    double m = 0.0;
    for (const auto& e : entries)
        if (!e.rel_error.empty())
            m = std::max(m, e.rel_error.back());
    return m;
}

std::vector<int> sample_dofs(const LensShape& shape, int n)
{
    const std::vector<int> mv = shape.movable();
    if (n <= 0 || mv.empty())
        return {};
    std::vector<int> out;
    const int m = static_cast<int>(mv.size());
    for (int k = 0; k < n && k < m; ++k) {
        const int idx = static_cast<int>(std::floor((k + 0.5) * m / std::min(n, m)));
        out.push_back(mv[std::min(idx, m - 1)]);
    }
    return out;
}

GradcheckReport gradcheck(const Problem& problem, const std::vector<int>& dofs, const std::vector<double>& taus)
{
    if (taus.empty())
        throw ConfigError("gradcheck needs at least one step size");
    const MultiPatchDomain base = problem.initial_domain();
    const LensShape shape = design_dof_set(base, problem.moving);
    const Evaluation ev = evaluate(problem, base);
    const ShapeGradient g = compute_gradient(problem, ev, shape).gradient;
    GradcheckReport rep;
    rep.J = ev.J;
    for (int i : dofs) {
        GradcheckEntry e;
        e.dof = i;
        e.adjoint = g.values(i);
        for (double tau : taus) {
            const double fd = fd_derivative(problem, base, shape, i, tau);
            e.taus.push_back(tau);
            e.fd.push_back(fd);
            e.rel_error.push_back(std::abs(fd - e.adjoint) / std::max(std::abs(fd), 1e-300));
        }
        rep.entries.push_back(e);
    }
    return rep;
}

Manifest cmd_simulate(const RunConfig& cfg0, const RunOptions& opts)
{
    const RunConfig cfg = effective_config(cfg0, opts);
    const std::string dir = prepare_dir(cfg);
    Manifest m{"simulate", cfg, {}, {}, "ok", {}};
    Stopwatch sw;
    Problem problem = cfg.problem();
    const MultiPatchDomain domain = problem.initial_domain();
    Assembler asmb(domain, problem.materials, problem.assembly);
    const AssembledSystem sys = asmb.system(problem.excitation, problem.tracking_box(domain));
    m.timings.emplace_back("assembly", sw.lap());
    const StateResult st = solve_state(sys, problem.grid, problem.alpha, problem.state);
    m.timings.emplace_back("state", sw.lap());

    const std::string series = series_name(cfg, "state");
    write_series(cfg, (fs::path(dir) / series).string(), st.field);
    m.artifacts.push_back(series);
    if (!cfg.output.probes.empty()) {
        write_probe_csv((fs::path(dir) / "probes.csv").string(), domain, st.field, cfg.output.probes);
        m.artifacts.push_back("probes.csv");
    }
    if (cfg.output.snapshot_every > 0) {
        fs::create_directories(fs::path(dir) / "snapshots");
        for (int n = 0; n < st.field.n_steps(); n += cfg.output.snapshot_every) {
            char name[64];
            std::snprintf(name, sizeof name, "snapshots/u_%06d.csv", n);
            write_field_csv((fs::path(dir) / name).string(), domain, st.field.value.col(n));
            m.artifacts.push_back(name);
        }
    }
    write_shape_csv((fs::path(dir) / "shape.csv").string(), design_dof_set(domain, problem.moving));
    m.artifacts.push_back("shape.csv");
    std::cerr << "simulate: " << domain.n_global() << " dofs, " << problem.grid.n_steps << " steps, mean "
              << st.mean_iterations() << " inner iterations\n";
    m.timings.emplace_back("output", sw.lap());
    return finish(m, dir);
}

Manifest cmd_adjoint(const RunConfig& cfg0, const RunOptions& opts, const std::string& state_path)
{
    const RunConfig cfg = effective_config(cfg0, opts);
    const std::string dir = prepare_dir(cfg);
    Manifest m{"adjoint", cfg, {}, {}, "ok", {}};
    Stopwatch sw;
    Problem problem = cfg.problem();
    problem.target = resolve_target(cfg, problem);
    const MultiPatchDomain domain = problem.initial_domain();
    Assembler asmb(domain, problem.materials, problem.assembly);
    const AssembledSystem sys = asmb.system(problem.excitation, problem.tracking_box(domain));
    const TargetEvaluator ud(problem.target, problem.grid, sys.n, asmb.volume().get(), &sys.M);
    m.timings.emplace_back("setup", sw.lap());
    const TimeSeriesField u = read_time_series(state_path);
    if (u.n_dofs() != sys.n || !(u.grid == problem.grid))
        throw DimensionError("stored state does not match the configured discretization");
    const AdjointResult ad = solve_adjoint(sys, problem.grid, problem.adjoint, u, ud);
    m.timings.emplace_back("adjoint", sw.lap());
    const LensShape shape = design_dof_set(domain, problem.moving);
    const ShapeGradient g = shape_gradient_boundary(u, ad.field, domain, problem.materials, shape);
    m.timings.emplace_back("gradient", sw.lap());

    const std::string series = series_name(cfg, "adjoint");
    write_series(cfg, (fs::path(dir) / series).string(), ad.field);
    write_gradient_csv((fs::path(dir) / "gradient.csv").string(), shape, g.values);
    m.artifacts.push_back(series);
    m.artifacts.push_back("gradient.csv");
    std::cerr << "adjoint: J = " << cost(u, ud, sys.MD, problem.grid) << ", |grad J| = " << g.norm << "\n";
    return finish(m, dir);
}

Manifest cmd_optimize(const RunConfig& cfg0, const RunOptions& opts)
{
    const RunConfig cfg = effective_config(cfg0, opts);
    const std::string dir = prepare_dir(cfg);
    Manifest m{"optimize", cfg, {}, {}, "ok", {}};
    Stopwatch sw;
    Problem problem = cfg.problem();
    problem.target = resolve_target(cfg, problem);
    const std::optional<LensShape> goal = goal_shape(cfg);
    m.timings.emplace_back("target", sw.lap());
    const OptimizationHistory h =
        optimize(problem, cfg.optimizer, goal ? &*goal : nullptr, [](const StepRecord& r) {
            std::cerr << "step " << r.step << ": J = " << r.J << " (" << r.J_rel << "), |grad| rel " << r.gradnorm_rel
                      << ", alpha " << r.alpha << ", repeats " << r.repeats << "\n";
        });
    m.timings.emplace_back("optimize", sw.lap());
    write_history_csv((fs::path(dir) / "history.csv").string(), h);
    write_shape_csv((fs::path(dir) / "shape_final.csv").string(), h.final_shape);
    write_gradient_csv((fs::path(dir) / "gradient_final.csv").string(), h.final_shape, h.steps.back().gradient);
    m.artifacts.insert(m.artifacts.end(), {"history.csv", "shape_final.csv", "gradient_final.csv"});
    std::cerr << "optimize: stopped (" << h.stop_reason << ") after " << h.steps.size() - 1 << " accepted steps\n";
    return finish(m, dir);
}

Manifest cmd_make_target(const RunConfig& cfg0, const RunOptions& opts)
{
    const RunConfig cfg = effective_config(cfg0, opts);
    if (!cfg.goal.enabled)
        throw ConfigError("make-target needs a goal lens");
    const std::string dir = prepare_dir(cfg);
    Manifest m{"make-target", cfg, {}, {}, "ok", {}};
    Stopwatch sw;
    const Problem problem = cfg.problem();
    const TimeSeriesField t = make_synthetic_target(problem, cfg.goal_params(), cfg.synthetic);
    m.timings.emplace_back("synthetic", sw.lap());
    const std::string series = series_name(cfg, "target");
    write_series(cfg, (fs::path(dir) / series).string(), t);
    m.artifacts.push_back(series);
    return finish(m, dir);
}

Manifest cmd_gradcheck(const RunConfig& cfg0, const RunOptions& opts, int n_dofs, std::vector<double> taus)
{
    const RunConfig cfg = effective_config(cfg0, opts);
    const std::string dir = prepare_dir(cfg);
    Manifest m{"gradcheck", cfg, {}, {}, "ok", {}};
    Stopwatch sw;
    Problem problem = cfg.problem();
    problem.target = resolve_target(cfg, problem);
    const LensShape shape = design_dof_set(problem.initial_domain(), problem.moving);
    const GradcheckReport rep = gradcheck(problem, sample_dofs(shape, n_dofs), taus);
    m.timings.emplace_back("gradcheck", sw.lap());

    std::string csv = "dof,tau,fd,adjoint,rel_error\n";
    nlohmann::json j = {{"J", rep.J}, {"max_rel_error", rep.max_rel_error()}, {"entries", nlohmann::json::array()}};
    for (const auto& e : rep.entries) {
        for (size_t k = 0; k < e.taus.size(); ++k) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.dof, e.taus[k], e.fd[k], e.adjoint,
                          e.rel_error[k]);
            csv += buf;
        }
        j["entries"].push_back({{"dof", e.dof}, {"adjoint", e.adjoint}, {"taus", e.taus}, {"fd", e.fd},
                                {"rel_error", e.rel_error}});
    }
    write_text((fs::path(dir) / "gradcheck.csv").string(), csv);
    write_text((fs::path(dir) / "gradcheck.json").string(), j.dump(2) + "\n");
    m.artifacts.insert(m.artifacts.end(), {"gradcheck.csv", "gradcheck.json"});
    std::cerr << "gradcheck: max relative mismatch " << rep.max_rel_error() << "\n";
    return finish(m, dir);
}

} // namespace lensopt
