#include "../support/model_problems.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/state_solver.hpp"

#include <gtest/gtest.h>
#include <cmath>

using namespace lensopt;
using namespace lensopt::testing;

namespace {

AssembledSystem lens_system(const Excitation& exc, Materials m = {})
{
    MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), 2, Refinement::layout(4, 2, 4, 3, 3, 2));
    return Assembler(d, m).system(exc, Box::of_patch(d.patches[kTrackingPatch]));
}

} // namespace

TEST(TimeGrid, PaperStepSize)
{
    TimeGrid g{90e-6, 3801};
    EXPECT_NEAR(g.dt(), 23.684e-9, 1e-12);
    EXPECT_DOUBLE_EQ(g.t(3800), 90e-6);
}

TEST(TimeGrid, TooFewLevelsRejected)
{
    EXPECT_THROW((TimeGrid{90e-6, 0}.validate()), ConfigError);
    EXPECT_THROW((TimeGrid{90e-6, 1}.validate()), ConfigError);
    EXPECT_THROW((TimeGrid{-1.0, 10}.validate()), ConfigError);
}

TEST(AlphaParams, DefaultsAndValidation)
{
    AlphaParams a;
    EXPECT_DOUBLE_EQ(a.alpha_m, 0.5);
    EXPECT_DOUBLE_EQ(a.alpha_f, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(a.beta, 0.45);
    EXPECT_DOUBLE_EQ(a.gamma, 0.75);
    a.beta = 0.0;
    EXPECT_THROW(a.validate(), ConfigError);
}

TEST(EffectiveMass, ScalarTableParameters)
{
    AssembledSystem s = scalar_system(2.0, 3.0, 4.0, [](double) { return 0.0; });
    SpMat A = effective_mass_matrix(s.M, s.C, s.K, AlphaParams{}, 1.0);
    EXPECT_NEAR(A.coeff(0, 0), 3.7, 1e-14);
}

TEST(EffectiveMass, NewmarkSubstitution)
{
    AssembledSystem s = scalar_system(2.0, 3.0, 4.0, [](double) { return 0.0; });
    const double dt = 0.1;
    SpMat A = effective_mass_matrix(s.M, s.C, s.K, AlphaParams::newmark(), dt);
    EXPECT_NEAR(A.coeff(0, 0), 2.0 + 0.5 * dt * 3.0 + 0.25 * dt * dt * 4.0, 1e-15);
}

TEST(EffectiveMass, SmallStepLimit)
{
    AssembledSystem s = scalar_system(2.0, 3.0, 4.0, [](double) { return 0.0; });
    SpMat A = effective_mass_matrix(s.M, s.C, s.K, AlphaParams{}, 1e-12);
    EXPECT_NEAR(A.coeff(0, 0), 1.0, 1e-10);
}

TEST(EffectiveMass, SingularMatrixRejected)
{
    AssembledSystem s = scalar_system(0.0, 0.0, 0.0, [](double) { return 0.0; });
    EXPECT_THROW(effective_mass(s.M, s.C, s.K, AlphaParams{}, 1.0), FactorizationError);
}

TEST(StateSolver, ZeroExcitationStaysZero)
{
    AssembledSystem s = lens_system(Excitation{0.0, 70e3});
    StateResult r = solve_state(s, TimeGrid{5e-6, 60}, AlphaParams{});
    EXPECT_EQ(r.field.value.norm(), 0.0);
    EXPECT_EQ(r.field.rate.norm(), 0.0);
    EXPECT_EQ(r.field.accel.norm(), 0.0);
}

TEST(StateSolver, InitialAccelerationSolvesMassSystem)
{
    AssembledSystem s = scalar_system(2.0, 0.0, 1.0, [](double t) { return 3.0 + t; });
    StateResult r = solve_state(s, TimeGrid{1.0, 5}, AlphaParams{});
    EXPECT_DOUBLE_EQ(r.field.value(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(r.field.rate(0, 0), 0.0);
    EXPECT_NEAR(r.field.accel(0, 0), 1.5, 1e-15);
}

TEST(StateSolver, LinearProblemNeedsOneInnerSolve)
{
    AssembledSystem s = lens_system(Excitation{});
    s.tensor = nullptr;
    s.A1 = SpMat(s.n, s.n);
    s.A2 = SpMat(s.n, s.n);
    StateResult r = solve_state(s, TimeGrid{5e-6, 60}, AlphaParams{});
    EXPECT_EQ(r.max_iterations(), 1);
    EXPECT_GT(r.field.value.norm(), 0.0);
}

TEST(StateSolver, NonlinearIterationCountModerate)
{
    AssembledSystem s = lens_system(Excitation{});
    StateResult r = solve_state(s, TimeGrid{20e-6, 300}, AlphaParams{});
    EXPECT_GT(r.mean_iterations(), 1.0);
    EXPECT_LE(r.mean_iterations(), 15.0);
}

TEST(StateSolver, FixedPointConvergesToStepEquation)
{
    // converged accelerations satisfy the discrete nonlinear step equation
    AssembledSystem s = lens_system(Excitation{});
    StateOptions o;
    o.tol_u = 1e-12;
    const AlphaParams ap;
    const TimeGrid g{10e-6, 120};
    StateResult r = solve_state(s, g, ap, o);
    const int n = 80;
    const double af = ap.alpha_f, am = ap.alpha_m, dt = g.dt();
    const Eigen::VectorXd u = (1 - af) * r.field.value.col(n + 1) + af * r.field.value.col(n);
    const Eigen::VectorXd v = (1 - af) * r.field.rate.col(n + 1) + af * r.field.rate.col(n);
    const Eigen::VectorXd a = (1 - am) * r.field.accel.col(n + 1) + am * r.field.accel.col(n);
    const Eigen::VectorXd res = s.M * a + s.C * v + s.K * u + s.A1 * v + s.A2 * a -
                                s.load_at(g.t(n) + (1 - af) * dt) - s.apply_tensor(v, v) - s.apply_tensor(u, a);
    const Eigen::VectorXd ma = s.M * a;
    EXPECT_LT(res.norm(), 1e-8 * ma.norm());
}

TEST(StateSolver, IterationLimitRaisesStepFailure)
{
    AssembledSystem s = lens_system(Excitation{});
    StateOptions o;
    o.max_iter = 1;
    try {
        solve_state(s, TimeGrid{20e-6, 300}, AlphaParams{}, o);
        FAIL() << "expected a step failure";
    } catch (const StepFailure& e) {
        EXPECT_GE(e.step(), 1);
    }
}

TEST(StateSolver, NonFiniteDataAborts)
{
    AssembledSystem s = scalar_system(1.0, 0.0, 1.0, [](double t) { return t > 0.5 ? NAN : 0.0; });
    EXPECT_THROW(solve_state(s, TimeGrid{1.0, 11}, AlphaParams{}), StepFailure);
}

TEST(StateSolver, UndampedNewmarkConservesEnergy)
{
    Materials m;
    m.fluid.b = 0.0;
    MultiPatchDomain d = closed_box(0.02, 0.02, 2, 4, 4);
    AssembledSystem s = Assembler(d, m).system(Excitation{1e6, 200e3}, Box{0, 0.02, 0, 0.02});
    s.tensor = nullptr;
    const double dt = 2e-7, t_off = 48.0 / (2 * M_PI * 200e3);
    const int n_off = static_cast<int>(std::ceil(t_off / dt));
    const TimeGrid g{(n_off + 1000) * dt, n_off + 1001};
    StateResult r = solve_state(s, g, AlphaParams::newmark());
    const std::vector<double> e = discrete_energy(s, r.field);
    const int start = g.n_steps - 1001;
    double drift = 0.0;
    for (int n = start; n < g.n_steps; ++n)
        drift = std::max(drift, std::abs(e[n] - e[start]));
    ASSERT_GT(e[start], 0.0);
    EXPECT_LT(drift / e[start], 1e-10);
}

TEST(StateSolver, NewmarkSecondOrder)
{
    const AlphaParams nm = AlphaParams::newmark();
    const double e1 = manufactured_error(41, 4.0, 9.0, nm), e2 = manufactured_error(81, 4.0, 9.0, nm),
                 e3 = manufactured_error(161, 4.0, 9.0, nm);
    EXPECT_GE(std::log2(e1 / e2), 1.9);
    EXPECT_GE(std::log2(e2 / e3), 1.9);
}

TEST(StateSolver, TableParametersDissipateHighFrequencies)
{
    EXPECT_LT(spectral_radius(amplification(1e4, AlphaParams{})), 1.0);
    for (double w : {0.01, 0.1, 1.0, 10.0, 100.0})
        EXPECT_LE(spectral_radius(amplification(w, AlphaParams{})), 1.0 + 1e-12) << w;
}

TEST(StateSolver, ProbeCallbackSeesEveryStep)
{
    AssembledSystem s = scalar_system(1.0, 0.0, 1.0, [](double) { return 1.0; });
    StateOptions o;
    int calls = 0;
    o.on_step = [&](int, const Eigen::VectorXd&) { ++calls; };
    solve_state(s, TimeGrid{1.0, 17}, AlphaParams{}, o);
    EXPECT_EQ(calls, 17);
}
