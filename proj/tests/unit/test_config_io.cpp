#include "lensopt/config.hpp"
#include "lensopt/errors.hpp"
#include "lensopt/io.hpp"
#include "lensopt/runner.hpp"

#include <gtest/gtest.h>
#include <cmath>
#include <filesystem>

using namespace lensopt;

TEST(Config, EmptyTextGivesPaperDefaults)
{
    const RunConfig c = parse_config_text("");
    EXPECT_DOUBLE_EQ(c.materials.fluid.c, 1500.0);
    EXPECT_DOUBLE_EQ(c.materials.lens.c, 1100.0);
    EXPECT_DOUBLE_EQ(c.materials.fluid.b, 6e-9);
    EXPECT_DOUBLE_EQ(c.materials.lens.b, 4e-9);
    EXPECT_DOUBLE_EQ(c.materials.fluid.rho, 1000.0);
    EXPECT_DOUBLE_EQ(c.materials.lens.rho, 1250.0);
    EXPECT_DOUBLE_EQ(c.materials.fluid.b_over_a, 5.0);
    EXPECT_DOUBLE_EQ(c.materials.lens.b_over_a, 4.0);
    EXPECT_DOUBLE_EQ(c.time.T_final, 90e-6);
    EXPECT_EQ(c.time.n_steps, 3801);
    EXPECT_DOUBLE_EQ(c.alpha.gamma, 0.75);
    EXPECT_DOUBLE_EQ(c.alpha.beta, 0.45);
    EXPECT_DOUBLE_EQ(c.alpha.alpha_m, 0.5);
    EXPECT_DOUBLE_EQ(c.alpha.alpha_f, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.adjoint.gamma_p, 0.5);
    EXPECT_DOUBLE_EQ(c.adjoint.beta_p, 0.25);
    EXPECT_DOUBLE_EQ(c.tol_u, 1e-6);
    EXPECT_DOUBLE_EQ(c.adjoint.tol_p, 1e-8);
    EXPECT_DOUBLE_EQ(c.optimizer.tol_grad, 1e-4);
    EXPECT_DOUBLE_EQ(c.optimizer.tol_step, 1e-8);
    EXPECT_DOUBLE_EQ(c.excitation.g0, 4e9);
    EXPECT_DOUBLE_EQ(c.excitation.frequency, 70e3);
    EXPECT_DOUBLE_EQ(c.domain.L, 0.12);
    EXPECT_DOUBLE_EQ(c.domain.S, 0.09);
    EXPECT_EQ(c.degree, 2);
}

TEST(Config, RestatedDefaultIsIdempotent)
{
    const RunConfig a = parse_config_text("{}");
    const RunConfig b = parse_config_text(R"({"materials": {"fluid": {"c": 1500.0}}})");
    EXPECT_EQ(to_json(a), to_json(b));
    EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(Config, OverridesApply)
{
    const RunConfig c = parse_config_text(R"({"time": {"n_steps": 401}, "domain": {"preset": "upper_curved"},
                                             "optimizer": {"moving": "upper", "thickness": true}})");
    EXPECT_EQ(c.time.n_steps, 401);
    EXPECT_DOUBLE_EQ(c.domain.P, 0.015);
    EXPECT_EQ(c.moving, MovingSet::Upper);
    EXPECT_TRUE(c.thickness);
    EXPECT_NE(config_hash(c), config_hash(RunConfig{}));
}

TEST(Config, ZeroStepsRejected)
{
    EXPECT_THROW(parse_config_text(R"({"time": {"n_steps": 0}})"), ConfigError);
}

TEST(Config, UnknownKeyRejectedWithLine)
{
    const std::string text = "{\n  \"time\": {\n    \"T_final\": 1e-5,\n    \"n_stpes\": 3\n  }\n}\n";
    try {
        parse_config_text(text);
        FAIL() << "expected a config error";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("n_stpes"), std::string::npos);
        EXPECT_NE(msg.find("line 4"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text(R"({"timing": {}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"time": {"n_steps": "many"}})"), ConfigError);
    EXPECT_THROW(parse_config_text("{ not json"), ConfigError);
}

TEST(Config, EnvironmentOverrides)
{
    nlohmann::json j = nlohmann::json::object();
    apply_env_overrides(j, {{"LENSOPT_TIME__N_STEPS", "123"},
                            {"LENSOPT_MATERIALS__LENS__C", "1200"},
                            {"LENSOPT_OPTIMIZER__MOVING", "lower"},
                            {"HOME", "/root"}});
    const RunConfig c = config_from_json(j);
    EXPECT_EQ(c.time.n_steps, 123);
    EXPECT_DOUBLE_EQ(c.materials.lens.c, 1200.0);
    EXPECT_EQ(c.moving, MovingSet::Lower);
}

TEST(Config, ManifestRoundTripIsLossless)
{
    for (const char* name : {"twin_coarse.json", "paper_test2.json", "channel_demo.json"}) {
        const RunConfig c = parse_config(std::string(LENSOPT_SOURCE_DIR) + "/configs/" + name);
        Manifest m{"simulate", c, {{"state", 1.5}}, {"state.lots"}, "ok", {}};
        const nlohmann::json mj = manifest_json(m);
        EXPECT_EQ(mj.at("config_hash"), config_hash(c));
        const RunConfig r = config_from_manifest(nlohmann::json::parse(mj.dump()));
        EXPECT_EQ(to_json(r), to_json(c)) << name;
    }
}

TEST(Config, ShippedConfigsParse)
{
    for (const auto& e : std::filesystem::directory_iterator(std::string(LENSOPT_SOURCE_DIR) + "/configs"))
        if (e.path().extension() == ".json")
            EXPECT_NO_THROW(parse_config(e.path().string())) << e.path();
}

namespace {

MultiPatchDomain tiny()
{
    return build_lens_domain(lens_preset("upper_straight"), 1, Refinement::layout(2, 1, 2, 1, 1, 1));
}

} // namespace

TEST(FieldCsv, HeaderAndFullPrecision)
{
    const MultiPatchDomain d = tiny();
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(d.n_global(), 0.0, 1.0) / 3.0;
    const std::string csv = field_csv(d, u);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "patch,i1,i2,x,y,value");
    int rows = 0;
    for (char ch : csv)
        rows += ch == '\n';
    int local = 0;
    for (const auto& p : d.patches)
        local += p.size();
    EXPECT_EQ(rows, local + 1);
    // 17 significant digits survive a text round trip
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        int p, i, j;
        double x, y, v;
        ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%lf", &p, &i, &j, &x, &y, &v), 6);
        EXPECT_EQ(v, u(d.dofs(p, d.patches[p].index(i, j))));
        EXPECT_EQ(x, d.patches[p].control_point(i, j)(0));
    }
    EXPECT_EQ(field_csv(d, u), csv);
    EXPECT_THROW(field_csv(d, u.head(3)), DimensionError);
}

TEST(FieldCsv, PointEvaluation)
{
    const MultiPatchDomain d = tiny();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.n_global());
    EXPECT_NEAR(eval_at_point(d, ones, Point(0.01, 0.1)), 1.0, 1e-13);
    Eigen::VectorXd y(d.n_global());
    for (int p = 0; p < d.n_patches(); ++p)
        for (int k = 0; k < d.patches[p].size(); ++k)
            y(d.dofs(p, k)) = d.patches[p].control_points()[k](1);
    // q = 1 reproduces linear functions on the straight-sided patches
    EXPECT_NEAR(eval_at_point(d, y, Point(0.045, 0.03)), 0.03, 1e-12);
    EXPECT_THROW(eval_at_point(d, ones, Point(0.2, 0.2)), DomainError);
}

TEST(HistoryCsv, Columns)
{
    OptimizationHistory h;
    StepRecord r;
    r.J = 2.0;
    h.steps.push_back(r);
    r.step = 1;
    r.J = 1.0;
    r.J_rel = 0.5;
    r.shape_error = 1e-3;
    h.steps.push_back(r);
    const std::string csv = history_csv(h);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "step,J,J/J0,gradnorm,gradnorm/gradnorm0,alpha,accepted,repeats,shape_error_l2");
    EXPECT_NE(csv.find("\n0,2,1,0,1,0,1,0,\n"), std::string::npos);
    EXPECT_NE(csv.find("\n1,1,0.5,0,1,0,1,0,0.001"), std::string::npos);
}

TEST(Runner, SampleDofsSpreadOverMovable)
{
    LensShape s;
    for (int i = 0; i < 10; ++i)
        s.dofs.push_back({i, LensBoundary::Upper, 0.0, 0.0, i == 0 || i == 9});
    const auto d = sample_dofs(s, 3);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0], 2);
    EXPECT_EQ(d[1], 5);
    EXPECT_EQ(d[2], 7);
    EXPECT_EQ(sample_dofs(s, 20).size(), 8u);
}

TEST(Runner, SimulateWritesArtifactsAndManifest)
{
    RunConfig c = parse_config_text(R"({"domain": {"degree": 1, "refinement": [2, 1, 2, 1, 1, 1]},
                                        "time": {"T_final": 1e-5, "n_steps": 21}, "excitation": {"g0": 0.0},
                                        "output": {"snapshot_every": 10, "probes": [[0.0, 0.1]]}})");
    RunOptions o;
    o.out_dir = ::testing::TempDir() + "/lensopt_simulate";
    o.deterministic = true;
    const Manifest m = cmd_simulate(c, o);
    EXPECT_EQ(m.status, "ok");
    for (const auto& a : m.artifacts)
        EXPECT_TRUE(std::filesystem::exists(o.out_dir + "/" + a)) << a;
    const TimeSeriesField f = read_time_series(o.out_dir + "/state.lots");
    EXPECT_EQ(f.value.norm(), 0.0);
    const nlohmann::json mj = nlohmann::json::parse(read_text(o.out_dir + "/manifest.json"));
    EXPECT_EQ(mj.at("command"), "simulate");
    EXPECT_TRUE(mj.contains("timings"));
    EXPECT_TRUE(mj.contains("version"));
}
