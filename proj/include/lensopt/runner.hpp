/** @file runner.hpp
    @brief Command level orchestration shared by the CLI and the Python module.
*/
#pragma once

#include "lensopt/config.hpp"
#include "lensopt/io.hpp"

namespace lensopt {

struct RunOptions {
    std::string out_dir;       ///< overrides output.dir when non-empty
    bool deterministic = false; ///< forces one worker
    int workers = 0;           ///< overrides solver.workers when positive
    int snapshot_every = -1;   ///< overrides output.snapshot_every when >= 0
};

/// Applies the run options to a copy of the config.
RunConfig effective_config(const RunConfig& cfg, const RunOptions& opts);

/// Target for the configured problem: Gaussian, a stored file, or synthetic data from the goal lens.
TargetField resolve_target(const RunConfig& cfg, const Problem& problem);

/// Goal design dofs on the optimization mesh, when a goal lens is configured.
std::optional<LensShape> goal_shape(const RunConfig& cfg);

struct GradcheckEntry {
    int dof = 0;
    double adjoint = 0.0;
    std::vector<double> taus;
    std::vector<double> fd;
    std::vector<double> rel_error; ///< |fd - adjoint| / |fd| per tau
};

struct GradcheckReport {
    double J = 0.0;
    std::vector<GradcheckEntry> entries;
    double max_rel_error() const; ///< over the finest tau
};

/// Evenly spaced movable dofs (n of them).
std::vector<int> sample_dofs(const LensShape& shape, int n);

GradcheckReport gradcheck(const Problem& problem, const std::vector<int>& dofs, const std::vector<double>& taus);

/// CLI commands; each writes its artifacts and manifest.json into the output directory and returns the manifest.
Manifest cmd_simulate(const RunConfig& cfg, const RunOptions& opts);
Manifest cmd_adjoint(const RunConfig& cfg, const RunOptions& opts, const std::string& state_path);
Manifest cmd_optimize(const RunConfig& cfg, const RunOptions& opts);
Manifest cmd_make_target(const RunConfig& cfg, const RunOptions& opts);
Manifest cmd_gradcheck(const RunConfig& cfg, const RunOptions& opts, int n_dofs = 3,
                       std::vector<double> taus = {1e-5, 5e-6});

} // namespace lensopt
