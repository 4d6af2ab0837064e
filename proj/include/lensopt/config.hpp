/** @file config.hpp
    @brief Run configuration: JSON schema, defaults, environment overrides, manifests.

    Sections and keys (all optional; an empty object yields the defaults):
    - domain: preset, L, B, K, W, P, S, R, degree, refinement [nx_left, nx_right, ny_bottom, ny_lens, ny_middle, ny_top]
    - materials: fluid / lens { c, b, rho, b_over_a }
    - time: T_final, n_steps
    - alpha: alpha_m, alpha_f, beta, gamma
    - solver: tol_u, max_iter, quad_points, workers
    - adjoint: gamma_p, beta_p, tol_p, max_iter, tensor_source ("state" | "target")
    - excitation: g0, frequency
    - tracking: x0, x1, y0, y1 (all zero selects the tracking patch)
    - target: kind ("gaussian" | "stored"), A, y_fp, sigma_x, sigma_y, path
    - goal: preset, P, R (goal lens for synthetic data and shape errors)
    - optimizer: s_max, tol_grad, tol_step, base, grow, shrink, moving ("upper" | "lower" | "both"), thickness
    - synthetic: refine_factor, dt_factor, noise
    - output: dir, snapshot_every, probes [[x, y], ...], binary
    - seed
*/
#pragma once

#include "lensopt/optimizer.hpp"

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace lensopt {

enum class TargetKind { Gaussian, Stored };

struct GoalSpec {
    bool enabled = false;
    std::string preset;
    double P = 0.0;
    double R = 0.0;
};

struct OutputSpec {
    std::string dir = "out";
    int snapshot_every = 0;
    std::vector<Point> probes;
    bool binary = true;
};

struct RunConfig {
    std::string preset;
    DomainParams domain;
    int degree = 2;
    std::array<int, 6> layout{36, 9, 73, 35, 36, 36};
    Materials materials;
    TimeGrid time;
    AlphaParams alpha;
    double tol_u = 1e-6;
    int state_max_iter = 50;
    int quad_points = 0;
    int workers = 1;
    AdjointParams adjoint;
    Excitation excitation;
    Box tracking;
    TargetKind target_kind = TargetKind::Gaussian;
    GaussianTarget gaussian;
    std::string target_path;
    GoalSpec goal;
    OptConfig optimizer;
    MovingSet moving = MovingSet::Both;
    bool thickness = false;
    SyntheticOptions synthetic;
    OutputSpec output;
    std::uint64_t seed = 12345;

    void validate() const;
    Refinement refinement() const;
    /// Goal lens parameters; requires goal.enabled.
    DomainParams goal_params() const;
    /// Problem without its target (the target is attached by the caller).
    Problem problem() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Fills defaults and rejects unknown keys. `source` is used to locate offending keys by line.
RunConfig config_from_json(const nlohmann::json& j, const std::string& source = {});
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Applies LENSOPT_<SECTION>__<KEY>=value variables (values parsed as JSON, else taken as strings).
void apply_env_overrides(nlohmann::json& j, const std::vector<std::pair<std::string, std::string>>& env);
std::vector<std::pair<std::string, std::string>> environment_overrides();

std::uint64_t fnv1a(const std::string& s);
std::string config_hash(const RunConfig& cfg);

struct Manifest {
    std::string command;
    RunConfig config;
    std::vector<std::pair<std::string, double>> timings;
    std::vector<std::string> artifacts;
    std::string status = "ok";
    std::string error;
};

nlohmann::json manifest_json(const Manifest& m);
/// Reads the config back from a manifest.
RunConfig config_from_manifest(const nlohmann::json& m);

std::string version_string();

} // namespace lensopt
