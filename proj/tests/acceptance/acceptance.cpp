// Acceptance runner: one PASS/FAIL line per criterion, exit code 1 if any criterion fails.
// Usage: acceptance [criterion numbers...]   (default: all)
#include "../support/model_problems.hpp"
#include "lensopt/config.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/runner.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace lensopt;
using namespace lensopt::testing;
namespace fs = std::filesystem;

namespace {

const std::string kSource = LENSOPT_SOURCE_DIR;
const std::string kCli = LENSOPT_CLI;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double v, const char* f = "%.4g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string work_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("lensopt_acceptance_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

// ---------------------------------------------------------------- 1

void spline_exactness(Outcome& o)
{
    const auto b = eval_bspline_basis(KnotVector({0, 0, 0, 1, 1, 1}, 2), 0.5);
    const double bern = std::max({std::abs(b[0] - 0.25), std::abs(b[1] - 0.5), std::abs(b[2] - 0.25)});
    o.require(bern <= 1e-15, "Bernstein values");

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ud(0.0, 1.0), wd(0.5, 2.0), jit(-0.02, 0.02);
    double pou = 0.0, same = 0.0;
    for (int q = 1; q <= 3; ++q) {
        NurbsPatch p = bilinear_patch({0, 0}, {1, 0}, {0, 1}, {1, 1}, q, q, 3, 4);
        std::vector<Point> cps = p.control_points();
        for (auto& c : cps)
            c += Point(jit(rng), jit(rng));
        std::vector<double> w(cps.size()), w_eq(cps.size(), 2.5);
        for (auto& x : w)
            x = wd(rng);
        const NurbsPatch pr(p.knots(0), p.knots(1), cps, w), pe(p.knots(0), p.knots(1), cps, w_eq);
        for (int k = 0; k < 200; ++k) {
            const Point xh(ud(rng), ud(rng));
            const BasisValues bv = pr.eval_basis(xh);
            double s = 0.0;
            for (double v : bv.value)
                s += v;
            pou = std::max(pou, std::abs(s - 1.0));
            const BasisValues be = pe.eval_basis(xh);
            const auto bu = eval_bspline_basis(p.knots(0), xh(0)), bw = eval_bspline_basis(p.knots(1), xh(1));
            for (size_t m = 0; m < be.index.size(); ++m) {
                const int i = be.index[m] % p.n(0), j = be.index[m] / p.n(0);
                same = std::max(same, std::abs(be.value[m] - bu[i] * bw[j]));
            }
        }
    }
    o.require(pou <= 1e-12, "partition of unity");
    o.require(same <= 1e-14, "equal weights reduce to B-splines");

    const double s2 = std::sqrt(0.5);
    const NurbsCurve circle{KnotVector({0, 0, 0, 1, 1, 1}, 2), {{1, 0}, {1, 1}, {0, 1}}, {1, s2, 1}};
    double circ = 0.0;
    for (int k = 0; k <= 1000; ++k)
        circ = std::max(circ, std::abs(circle.eval(k / 1000.0).norm() - 1.0));
    o.require(circ <= 1e-12, "quarter circle");
    o.detail << "bernstein " << fmt(bern) << ", unity " << fmt(pou) << ", circle " << fmt(circ) << ", equal weights "
             << fmt(same);
}

// ---------------------------------------------------------------- 2

int union_count(const std::vector<int>& counts, const std::vector<DofPair>& pairs)
{
    std::map<std::pair<int, int>, std::pair<int, int>> parent;
    std::function<std::pair<int, int>(std::pair<int, int>)> find = [&](std::pair<int, int> a) {
        auto it = parent.find(a);
        if (it == parent.end() || it->second == a)
            return a;
        return it->second = find(it->second);
    };
    for (const auto& p : pairs) {
        auto a = find({p.patch_a, p.local_a}), b = find({p.patch_b, p.local_b});
        if (a != b)
            parent[b] = a;
    }
    std::set<std::pair<int, int>> roots;
    for (size_t p = 0; p < counts.size(); ++p)
        for (int l = 0; l < counts[p]; ++l)
            roots.insert(find({static_cast<int>(p), l}));
    return static_cast<int>(roots.size());
}

void gluing(Outcome& o)
{
    auto sq = [](double x0) { return bilinear_patch({x0, 0}, {x0 + 1, 0}, {x0, 1}, {x0 + 1, 1}, 2, 2, 1, 1); };
    std::vector<NurbsPatch> two = {sq(0), sq(1)};
    const int n2 = glue(two, edge_pairs(two, {0, Side::East, 1, Side::West})).n_global;
    std::vector<NurbsPatch> three = {sq(0), sq(1), sq(2)};
    auto pairs = edge_pairs(three, {0, Side::East, 1, Side::West});
    auto more = edge_pairs(three, {1, Side::East, 2, Side::West});
    pairs.insert(pairs.end(), more.begin(), more.end());
    const int n3 = glue(three, pairs).n_global, oracle = union_count({9, 9, 9}, pairs);
    o.require(n2 == 15, "two patches give 15");
    o.require(n3 == 21 && oracle == 21, "chain gives 21");
    o.detail << "two patches " << n2 << ", chain " << n3 << " (set union " << oracle << ")";
}

// ---------------------------------------------------------------- 3

void coefficients(Outcome& o)
{
    const double k = Materials{}.fluid.k();
    const double dt = TimeGrid{90e-6, 3801}.dt();
    o.require(std::abs(k - 1.5556e-9) <= 1e-13, "k of water");
    o.require(std::abs(dt - 23.684e-9) <= 0.001e-9, "time step");
    o.detail << "k = " << fmt(k, "%.6e") << " s^2 m/kg, dt = " << fmt(dt * 1e9, "%.4f") << " ns";
}

// ---------------------------------------------------------------- 4

void time_integrator(Outcome& o)
{
    // (a) undamped linear Newmark on a closed water box
    Materials m;
    m.fluid.b = 0.0;
    MultiPatchDomain d = closed_box(0.02, 0.02, 2, 4, 4);
    AssembledSystem s = Assembler(d, m).system(Excitation{1e6, 200e3}, Box{0, 0.02, 0, 0.02});
    s.tensor = nullptr;
    const double dt = 2e-7, t_off = 48.0 / (2 * M_PI * 200e3);
    const int n_off = static_cast<int>(std::ceil(t_off / dt));
    const TimeGrid g{(n_off + 1000) * dt, n_off + 1001};
    const StateResult r = solve_state(s, g, AlphaParams::newmark());
    const std::vector<double> e = discrete_energy(s, r.field);
    double drift = 0.0;
    for (int n = n_off; n < g.n_steps; ++n)
        drift = std::max(drift, std::abs(e[n] - e[n_off]) / e[n_off]);
    o.require(e[n_off] > 0.0 && drift <= 1e-10, "energy conservation");

    // (b) manufactured solution 1 - cos t, three halvings
    double min_order = 1e9;
    double prev = manufactured_error(41, 4.0, 9.0, AlphaParams::newmark());
    for (int n : {81, 161, 321}) {
        const double err = manufactured_error(n, 4.0, 9.0, AlphaParams::newmark());
        min_order = std::min(min_order, std::log2(prev / err));
        prev = err;
    }
    o.require(min_order >= 1.9, "temporal order");

    // (c) high-frequency limit of the amplification map
    const double rho = spectral_radius(amplification(1e6, AlphaParams{}));
    o.require(rho < 1.0, "spectral radius");
    o.detail << "energy drift " << fmt(drift) << " over 1000 steps, order " << fmt(min_order, "%.3f")
             << ", rho_inf " << fmt(rho, "%.4f");
}

// ---------------------------------------------------------------- 5

// windowed DFT magnitude of samples taken on [t0, t1]
double harmonic(const TimeGrid& g, const std::vector<double>& u, double omega, double t0, double t1)
{
    std::complex<double> s = 0.0;
    for (int n = 0; n < g.n_steps; ++n)
        if (g.t(n) >= t0 && g.t(n) <= t1)
            s += u[n] * std::exp(std::complex<double>(0.0, -omega * g.t(n)));
    return std::abs(s);
}

// Second to first harmonic ratio of dp/dt at each probe, gated on the arrival of the burst.
// The pressure itself carries a step left by the Neumann burst, which leaks into an ungated spectrum.
std::vector<double> channel_ratios(bool nonlinear, int& n_dofs, double& mean_it)
{
    using T = BoundaryTag;
    const double height = 0.12, f = 50e3;
    MultiPatchDomain d({bilinear_patch({0, 0}, {0.004, 0}, {0, height}, {0.004, height}, 2, 2, 2, 120)},
                       {Region::Fluid}, {{T::Excitation, T::Symmetry, T::Absorbing, T::Symmetry}}, {});
    Materials m;
    m.lens = m.fluid;
    AssembledSystem s = Assembler(d, m).system(Excitation{4e9, f}, Box{0, 0.004, 0, height});
    if (!nonlinear)
        s.tensor = nullptr;
    const TimeGrid g{160e-6, 2001};
    const StateResult r = solve_state(s, g, AlphaParams{});
    n_dofs = d.n_global();
    mean_it = r.mean_iterations();
    const double w = 2 * M_PI * f;
    std::vector<double> ratio;
    for (double y : {0.02, 0.06, 0.10}) {
        std::vector<double> rate(g.n_steps);
        for (int n = 0; n < g.n_steps; ++n)
            rate[n] = eval_at_point(d, r.field.rate.col(n), Point(0.002, y));
        const double t0 = y / m.fluid.c - 5e-6, t1 = t0 + 85e-6;
        ratio.push_back(harmonic(g, rate, 2 * w, t0, t1) / harmonic(g, rate, w, t0, t1));
    }
    return ratio;
}

void nonlinear_channel(Outcome& o)
{
    int n = 0;
    double it = 0.0, it_lin = 0.0;
    const std::vector<double> nl = channel_ratios(true, n, it), lin = channel_ratios(false, n, it_lin);
    o.require(nl[0] < nl[1] && nl[1] < nl[2], "second harmonic ratio increasing");
    o.require(n >= 400 && n <= 600, "channel size");
    o.detail << n << " dofs, 2001 steps, mean " << fmt(it, "%.1f") << " inner iterations; ratio at y = 0.02/0.06/0.10: "
             << fmt(nl[0]) << " / " << fmt(nl[1]) << " / " << fmt(nl[2]) << " (linear: " << fmt(lin[0]) << " / "
             << fmt(lin[1]) << " / " << fmt(lin[2]) << ")";
}

// ---------------------------------------------------------------- 6

void adjoint_checks(Outcome& o)
{
    MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), 2, Refinement::layout(4, 2, 4, 3, 3, 2));
    Assembler a(d, Materials{});
    const AssembledSystem s = a.system(Excitation{}, Box::of_patch(d.patches[kTrackingPatch]));
    const TimeGrid g{30e-6, 241};
    const StateResult st = solve_state(s, g, AlphaParams{});
    const AdjointParams ap;

    const AdjointResult zero = solve_adjoint(s, g, ap, st.field, TargetEvaluator(StoredTarget{st.field}, g, s.n));
    const double pmax = std::max(zero.field.value.cwiseAbs().maxCoeff(), zero.field.rate.cwiseAbs().maxCoeff());
    o.require(pmax <= 1e-12, "matching target gives zero adjoint");

    const GaussianTarget gt{6e5, 0.1, 0.02, 0.01};
    const TargetEvaluator ge(gt, g, s.n, a.volume().get(), &s.M);
    TimeSeriesField ud = TimeSeriesField::zeros(s.n, g);
    for (int n = 0; n < g.n_steps; ++n)
        ud.value.col(n) = ge.at_step(n);
    const AdjointResult p1 = solve_adjoint(s, g, ap, st.field, TargetEvaluator(StoredTarget{ud}, g, s.n));
    double worst = 0.0;
    for (double lambda : {3.0, -0.5}) {
        TimeSeriesField ul = ud;
        ul.value = st.field.value - lambda * (st.field.value - ud.value);
        const AdjointResult pl = solve_adjoint(s, g, ap, st.field, TargetEvaluator(StoredTarget{ul}, g, s.n));
        worst = std::max(worst, (pl.field.value - lambda * p1.field.value).norm() / (std::abs(lambda) * p1.field.value.norm()));
    }
    o.require(worst <= 1e-8, "load linearity");
    o.detail << "max |p| for u = u_d " << fmt(pmax) << ", linearity error " << fmt(worst) << " ("
             << d.n_global() << " dofs, mean " << fmt(p1.mean_iterations(), "%.1f") << " inner iterations)";
}

// ---------------------------------------------------------------- 7

void gradient_check(Outcome& o)
{
    const RunConfig cfg = parse_config(kSource + "/configs/gradcheck_coarse.json");
    Problem p = cfg.problem();
    p.target = resolve_target(cfg, p);
    const LensShape shape = design_dof_set(p.initial_domain(), p.moving);
    const std::vector<double> taus = {4e-4, 2e-4, 1e-4, 5e-5};
    const GradcheckReport rep = gradcheck(p, sample_dofs(shape, 3), taus);
    bool monotone = true;
    for (const auto& e : rep.entries) {
        for (size_t k = 1; k < e.rel_error.size(); ++k)
            monotone = monotone && e.rel_error[k] <= e.rel_error[k - 1];
        o.detail << "dof " << e.dof << ": ";
        for (size_t k = 0; k < e.rel_error.size(); ++k)
            o.detail << fmt(e.rel_error[k], "%.5f") << (k + 1 < e.rel_error.size() ? " -> " : "; ");
    }
    o.require(rep.entries.size() == 3, "three sampled dofs");
    o.require(rep.max_rel_error() <= 0.05, "mismatch at most 5%");
    o.require(monotone, "mismatch decreasing with tau");

    Problem h = p;
    h.materials.lens = h.materials.fluid;
    const Evaluation ev = evaluate(h, h.initial_domain());
    const ShapeGradient g = compute_gradient(h, ev, design_dof_set(ev.domain, h.moving)).gradient;
    const double gmax = g.values.cwiseAbs().maxCoeff();
    o.require(gmax <= 1e-12, "homogeneous gradient vanishes");
    o.detail << "max mismatch " << fmt(rep.max_rel_error(), "%.4f") << " at tau " << taus.back() << " ("
             << p.initial_domain().n_global() << " dofs, " << p.grid.n_steps << " steps); homogeneous max |g| "
             << fmt(gmax);
}

// ---------------------------------------------------------------- 8 and 10

struct HistoryTable {
    std::vector<double> J, shape_error;
    std::string text;
};

HistoryTable run_cli_optimize(const std::string& dir)
{
    const std::string cmd = "\"" + kCli + "\" optimize --config \"" + kSource + "/configs/twin_coarse.json\" --out \"" +
                            dir + "\" --deterministic 2> \"" + dir + "/log.txt\"";
    if (std::system(cmd.c_str()) != 0)
        throw Error("optimize run failed, see " + dir + "/log.txt");
    HistoryTable h;
    h.text = read_text(dir + "/history.csv");
    std::istringstream is(h.text);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        std::vector<std::string> col;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ','))
            col.push_back(c);
        h.J.push_back(std::stod(col.at(1)));
        h.shape_error.push_back(col.size() > 8 && !col[8].empty() ? std::stod(col[8]) : -1.0);
    }
    return h;
}

HistoryTable first_run;

void twin_optimization(Outcome& o)
{
    first_run = run_cli_optimize(work_dir("twin_a"));
    const auto& h = first_run;
    const size_t steps = h.J.size() - 1;
    bool monotone = true;
    for (size_t k = 1; k < h.J.size(); ++k)
        monotone = monotone && h.J[k] <= h.J[k - 1];
    const double dJ = 1.0 - h.J.back() / h.J.front();
    const double dE = 1.0 - h.shape_error.back() / h.shape_error.front();
    o.require(steps <= 30, "at most 30 gradient steps");
    o.require(dJ >= 0.80, "cost decrease >= 80%");
    o.require(dE >= 0.60, "shape error decrease >= 60%");
    o.require(monotone, "cost non-increasing");
    o.detail << steps << " accepted steps, J decrease " << fmt(100 * dJ, "%.1f") << "%, shape error "
             << fmt(h.shape_error.front(), "%.3e") << " -> " << fmt(h.shape_error.back(), "%.3e") << " ("
             << fmt(100 * dE, "%.1f") << "% decrease)";
}

void determinism(Outcome& o)
{
    if (first_run.text.empty())
        first_run = run_cli_optimize(work_dir("twin_a"));
    const HistoryTable second = run_cli_optimize(work_dir("twin_b"));
    o.require(!second.text.empty() && second.text == first_run.text, "identical history CSV");
    o.detail << "history.csv " << first_run.text.size() << " bytes, "
             << (second.text == first_run.text ? "bitwise identical" : "differs");
}

// ---------------------------------------------------------------- 9

void thickness(Outcome& o)
{
    const double d0 = reference_lens_dmin(0.0), d4 = reference_lens_dmin(0.04);
    o.require(std::abs(d0 - 0.01) <= 1e-15, "d_min(0) = 0.01");
    o.require(std::abs(d4) <= 1e-4, "d_min(0.04) near zero");

    // a focus at the top edge asks for a thinner lens; the constraint holds the current thickness
    Problem p;
    p.params = lens_preset("upper_straight");
    p.degree = 1;
    p.refinement = Refinement::layout(6, 2, 4, 3, 3, 2);
    p.excitation.frequency = 20e3;
    p.grid = TimeGrid{6e-5, 121};
    p.alpha = AlphaParams::newmark();
    p.target = GaussianTarget{2e7, 0.12, 0.02, 0.006};
    p.moving = MovingSet::Upper;
    const MultiPatchDomain base = p.initial_domain();
    const NurbsCurve up = base.patches[kLensPatch].side_curve(Side::North),
                     lo = base.patches[kLensPatch].side_curve(Side::South);
    const LensShape shape = design_dof_set(base, p.moving);
    const ShapeGradient g = compute_gradient(p, evaluate(p, base), shape).gradient;
    p.thickness = {true, [up, lo](double x) { return curve_y_at(up, x) - curve_y_at(lo, x) - 1e-13; }};
    OptConfig oc;
    oc.tol_step = 1e-3;
    const double alpha = oc.base / g.norm;
    const LensShape trial = update_boundary(shape, g, alpha);
    const FeasibilityReport rep = check_feasible(apply_shape(base, trial), trial, p.thickness, p.params.S);
    bool thickness_msg = false;
    for (const auto& m : rep.messages)
        thickness_msg = thickness_msg || m.find("thickness") != std::string::npos;
    bool thinning = true;
    for (int i : shape.movable())
        thinning = thinning && g.values(i) > 0.0;
    o.require(thinning, "descent direction thins the lens");
    o.require(!rep.ok && thickness_msg, "first trial violates the thickness constraint");

    const OptimizationHistory h = optimize(p, oc);
    const int expected = static_cast<int>(std::ceil(std::log2(1.0 / oc.tol_step)));
    o.require(h.stop_reason == "step size below tolerance", "clean termination below tol_step");
    o.require(h.rejected_trials == expected, "shrink and retry down to tol_step");
    o.require(h.steps.size() == 1 && (h.final_shape.y() - shape.y()).norm() == 0.0, "geometry kept");
    o.detail << "d_min(0) = " << fmt(d0, "%.17g") << ", d_min(0.04) = " << fmt(d4, "%.3e") << "; "
             << h.rejected_trials << " rejected trials, stop: " << h.stop_reason;
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    void (*run)(Outcome&);
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all = {
        {1, "spline exactness", 1.0, spline_exactness},
        {2, "gluing arithmetic", 1.0, gluing},
        {3, "coefficient derivation", 1.0, coefficients},
        {4, "time integrator", 120.0, time_integrator},
        {5, "nonlinear steepening", 300.0, nonlinear_channel},
        {6, "adjoint correctness", 300.0, adjoint_checks},
        {7, "shape gradient verification", 1200.0, gradient_check},
        {8, "scaled twin optimization", 3600.0, twin_optimization},
        {9, "thickness constraint", 300.0, thickness},
        {10, "determinism", 3600.0, determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id))
            continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(sec <= c.budget_s, "runtime budget " + fmt(c.budget_s, "%.0f") + " s");
        failed += !o.pass;
        std::cout << "criterion " << c.id << " (" << c.name << "): " << (o.pass ? "PASS" : "FAIL") << "  "
                  << o.detail.str() << "  [" << fmt(sec, "%.2f") << " s]" << std::endl;
    }
    return failed ? 1 : 0;
}
