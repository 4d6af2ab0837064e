#include "lensopt/optimizer.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/quadrature.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <algorithm>
#include <random>

namespace lensopt {

MultiPatchDomain Problem::initial_domain() const
{
    params.validate();
    return build_lens_domain(params, degree, refinement);
}

Box Problem::tracking_box(const MultiPatchDomain& domain) const
{
    if (tracking && !tracking->empty())
        return *tracking;
    return Box::of_patch(domain.patches.at(kTrackingPatch));
}

Evaluation evaluate(const Problem& problem, const MultiPatchDomain& domain)
{
    Assembler asmb(domain, problem.materials, problem.assembly);
    Evaluation ev{domain, asmb.system(problem.excitation, problem.tracking_box(domain)), asmb.volume(), nullptr, {}, 0.0};
    ev.target = std::make_shared<TargetEvaluator>(problem.target, problem.grid, ev.system.n, ev.volume.get(),
                                                  &ev.system.M);
    ev.state = solve_state(ev.system, problem.grid, problem.alpha, problem.state);
    ev.J = cost(ev.state.field, *ev.target, ev.system.MD, problem.grid);
    return ev;
}

GradientResult compute_gradient(const Problem& problem, const Evaluation& eval, const LensShape& shape)
{
    GradientResult g;
    g.adjoint = solve_adjoint(eval.system, problem.grid, problem.adjoint, eval.state.field, *eval.target);
    g.gradient = shape_gradient_boundary(eval.state.field, g.adjoint.field, eval.domain, problem.materials, shape);
    return g;
}

double fd_derivative(const Problem& problem, const MultiPatchDomain& base, const LensShape& shape, int i, double tau)
{
    if (i < 0 || i >= shape.size())
        throw DimensionError("design dof index out of range");
    if (!(tau > 0.0))
        throw DomainError("finite difference step must be positive");
    LensShape plus = shape, minus = shape;
    plus.dofs[i].y += tau;
    minus.dofs[i].y -= tau;
    const double Jp = evaluate(problem, apply_shape(base, plus)).J;
    const double Jm = evaluate(problem, apply_shape(base, minus)).J;
    return (Jp - Jm) / (2.0 * tau);
}

void OptConfig::validate() const
{
    if (s_max < 0)
        throw ConfigError("s_max must be non-negative");
    if (!(tol_grad >= 0.0))
        throw ConfigError("tol_grad must be non-negative");
    if (!(base > 0.0 && tol_step > 0.0))
        throw ConfigError("step base and tol_step must be positive");
    if (!(tol_step < 1.0))
        throw ConfigError("tol_step must be below the initial step factor 1");
    if (!(grow > 1.0))
        throw ConfigError("grow factor must exceed 1");
    if (!(shrink > 0.0 && shrink < 1.0))
        throw ConfigError("shrink factor must lie in (0, 1)");
}

namespace {

StepRecord make_record(int step, const Evaluation& ev, const ShapeGradient& g, double J0, double g0, double alpha,
                       int repeats, const LensShape& shape, const LensShape* goal)
{
    StepRecord r;
    r.step = step;
    r.J = ev.J;
    r.J_rel = J0 > 0.0 ? ev.J / J0 : 1.0;
    r.gradnorm = g.norm;
    r.gradnorm_rel = g0 > 0.0 ? g.norm / g0 : 0.0;
    r.alpha = alpha;
    r.accepted = true;
    r.repeats = repeats;
    r.shape = shape;
    r.gradient = g.values;
    if (goal)
        r.shape_error = shape_error_l2(shape, *goal);
    return r;
}

} // namespace

OptimizationHistory optimize(const Problem& problem, const OptConfig& opt, const LensShape* goal,
                             const StepCallback& on_step)
{
    opt.validate();
    const MultiPatchDomain base = problem.initial_domain();
    LensShape shape = design_dof_set(base, problem.moving);
    const double y_max = problem.params.S;
    const FeasibilityReport feas0 = check_feasible(base, shape, problem.thickness, y_max);
    if (!feas0.ok)
        throw GeometryError("initial lens is infeasible: " + feas0.messages.front());

    OptimizationHistory h;
    Evaluation ev = evaluate(problem, base);
    ShapeGradient g = compute_gradient(problem, ev, shape).gradient;
    const double J0 = ev.J, g0 = g.norm;
    h.steps.push_back(make_record(0, ev, g, J0, g0, 0.0, 0, shape, goal));
    if (on_step)
        on_step(h.steps.back());

    double s = 1.0;
    int prev_rejections = 0;
    int it = 0;
    if (g0 == 0.0) {
        h.stop_reason = "zero gradient";
    } else {
        while (true) {
            if (g.norm / g0 < opt.tol_grad) {
                h.stop_reason = "gradient tolerance";
                break;
            }
            if (it >= opt.s_max) {
                h.stop_reason = "iteration limit";
                break;
            }
            int rejections = 0;
            bool accepted = false;
            double alpha = 0.0;
            LensShape trial;
            MultiPatchDomain trial_domain;
            Evaluation trial_ev;
            while (true) {
                alpha = s * opt.base / g.norm;
                trial = update_boundary(shape, g, alpha);
                trial_domain = apply_shape(base, trial);
                if (check_feasible(trial_domain, trial, problem.thickness, y_max).ok) {
                    trial_ev = evaluate(problem, trial_domain);
                    accepted = trial_ev.J <= ev.J;
                }
                if (accepted)
                    break;
                ++rejections;
                ++h.rejected_trials;
                s *= opt.shrink;
                if (s < opt.tol_step)
                    break;
            }
            if (!accepted) {
                h.stop_reason = "step size below tolerance";
                break;
            }
            if (prev_rejections == 0)
                s *= opt.grow;
            prev_rejections = rejections;
            shape = trial;
            ev = std::move(trial_ev);
            g = compute_gradient(problem, ev, shape).gradient;
            ++it;
            h.steps.push_back(make_record(it, ev, g, J0, g0, alpha, rejections, shape, goal));
            if (on_step)
                on_step(h.steps.back());
        }
    }
    h.final_shape = shape;
    h.final_domain = ev.domain;
    return h;
}

namespace {

Refinement scaled(const Refinement& r, int f)
{
    Refinement out = r;
    for (auto& e : out.elements)
        for (int& v : e)
            v *= f;
    return out;
}

} // namespace

TimeSeriesField make_synthetic_target(const Problem& problem, const DomainParams& goal, const SyntheticOptions& opts)
{
    if (opts.refine_factor < 1 || opts.dt_factor < 1)
        throw ConfigError("synthetic data factors must be at least 1");
    if (!(opts.noise >= 0.0))
        throw ConfigError("noise level must be non-negative");
    goal.validate();
    const MultiPatchDomain coarse = build_lens_domain(goal, problem.degree, problem.refinement);
    const MultiPatchDomain fine = build_lens_domain(goal, problem.degree, scaled(problem.refinement, opts.refine_factor));

    TimeGrid fgrid{problem.grid.T_final, (problem.grid.n_steps - 1) * opts.dt_factor + 1};
    Assembler fasm(fine, problem.materials, problem.assembly);
    const Box D = problem.tracking_box(fine);
    const AssembledSystem fsys = fasm.system(problem.excitation, D);
    const StateResult fst = solve_state(fsys, fgrid, problem.alpha, problem.state);

    // L2 projection on the tracking patch: coarse basis against the fine solution
    const int tp = kTrackingPatch;
    const NurbsPatch& cp = coarse.patches.at(tp);
    const NurbsPatch& fp = fine.patches.at(tp);
    const int nq = std::max(cp.degree(0), cp.degree(1)) + 1;
    const QuadRule1D& r = gauss_legendre(nq);
    const int sub = opts.refine_factor;
    std::vector<Eigen::Triplet<double>> tc, tf;
    std::vector<double> w;
    BasisValues bc, bf;
    auto zu = cp.knots(0).breakpoints(), zv = cp.knots(1).breakpoints();
    int row = 0;
    for (size_t ev = 0; ev + 1 < zv.size(); ++ev)
        for (size_t eu = 0; eu + 1 < zu.size(); ++eu)
            for (int sv = 0; sv < sub; ++sv)
                for (int su = 0; su < sub; ++su) {
                    const double hu = (zu[eu + 1] - zu[eu]) / sub, hv = (zv[ev + 1] - zv[ev]) / sub;
                    const double u0 = zu[eu] + su * hu, v0 = zv[ev] + sv * hv;
                    for (size_t b = 0; b < r.nodes.size(); ++b)
                        for (size_t a = 0; a < r.nodes.size(); ++a) {
                            const Point xh(u0 + hu * r.nodes[a], v0 + hv * r.nodes[b]);
                            cp.eval_basis(xh, bc);
                            fp.eval_basis(xh, bf);
                            const double det = cp.eval_geometry(xh, tp).det;
                            w.push_back(r.weights[a] * r.weights[b] * hu * hv * det);
                            for (size_t k = 0; k < bc.index.size(); ++k)
                                tc.emplace_back(row, bc.index[k], bc.value[k]);
                            for (size_t k = 0; k < bf.index.size(); ++k)
                                tf.emplace_back(row, bf.index[k], bf.value[k]);
                            ++row;
                        }
                }
    Eigen::SparseMatrix<double> Nc(row, cp.size()), Nf(row, fp.size());
    Nc.setFromTriplets(tc.begin(), tc.end());
    Nf.setFromTriplets(tf.begin(), tf.end());
    const Eigen::Map<const Eigen::VectorXd> W(w.data(), row);
    const Eigen::SparseMatrix<double> NcW = Nc.transpose() * W.asDiagonal();
    const Eigen::SparseMatrix<double> Mloc = NcW * Nc;
    const Eigen::SparseMatrix<double> Bloc = NcW * Nf;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Mloc);
    if (ldlt.info() != Eigen::Success)
        throw FactorizationError("tracking patch mass matrix factorization failed");

    const int nc = problem.grid.n_steps;
    Eigen::MatrixXd fine_local(fp.size(), nc);
    for (int k = 0; k < fp.size(); ++k) {
        const int gdof = fine.dofs(tp, k);
        for (int n = 0; n < nc; ++n)
            fine_local(k, n) = fst.field.value(gdof, n * opts.dt_factor);
    }
    const Eigen::MatrixXd rhs = Bloc * fine_local;
    const Eigen::MatrixXd coarse_local = ldlt.solve(rhs);

    TimeSeriesField out = TimeSeriesField::zeros(coarse.n_global(), problem.grid);
    for (int k = 0; k < cp.size(); ++k)
        out.value.row(coarse.dofs(tp, k)) = coarse_local.row(k);

    if (opts.noise > 0.0) {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<int> rows;
        for (int k = 0; k < cp.size(); ++k)
            rows.push_back(coarse.dofs(tp, k));
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        for (int n = 0; n < nc; ++n) {
            // standard deviation follows the field amplitude of each time level
            const double sigma = opts.noise * coarse_local.col(n).cwiseAbs().maxCoeff();
            for (int gd : rows)
                out.value(gd, n) += sigma * nd(rng);
        }
    }
    return out;
}

} // namespace lensopt
