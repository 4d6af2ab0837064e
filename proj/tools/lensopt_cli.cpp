// Command line front end: simulate, adjoint, optimize, make-target, gradcheck.
#include "lensopt/errors.hpp"
#include "lensopt/runner.hpp"

#include <CLI11.hpp>
#include <iostream>

using namespace lensopt;

int main(int argc, char** argv)
{
    CLI::App app{"Isogeometric Westervelt solver and acoustic lens shape optimizer"};
    app.require_subcommand(1);

    std::string config_path;
    RunOptions opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration (empty file gives the defaults)");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_flag("--deterministic", opts.deterministic, "single worker, bitwise reproducible output");
        sub->add_option("--workers", opts.workers, "worker threads for tensor applications")->check(CLI::PositiveNumber);
        sub->add_option("--snapshot-every", opts.snapshot_every, "write a field snapshot every k steps")
            ->check(CLI::NonNegativeNumber);
    };

    auto* simulate = app.add_subcommand("simulate", "forward solve");
    auto* adjoint = app.add_subcommand("adjoint", "adjoint solve for a stored forward history");
    auto* optimize = app.add_subcommand("optimize", "gradient descent on the lens shape");
    auto* make_target = app.add_subcommand("make-target", "synthetic target data from the goal lens");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite difference check of the shape gradient");
    for (auto* s : {simulate, adjoint, optimize, make_target, gradcheck})
        add_common(s);
    std::string state_path;
    adjoint->add_option("--state", state_path, "stored forward history")->required();
    int n_dofs = 3;
    std::vector<double> taus{1e-5, 5e-6};
    gradcheck->add_option("--dofs", n_dofs, "number of sampled design dofs");
    gradcheck->add_option("--tau", taus, "finite difference steps, coarse to fine");

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    std::string cmd = app.get_subcommands().front()->get_name();
    try {
        cfg = config_path.empty() ? parse_config_text("") : parse_config(config_path);
        if (cmd == "simulate")
            cmd_simulate(cfg, opts);
        else if (cmd == "adjoint")
            cmd_adjoint(cfg, opts, state_path);
        else if (cmd == "optimize")
            cmd_optimize(cfg, opts);
        else if (cmd == "make-target")
            cmd_make_target(cfg, opts);
        else
            cmd_gradcheck(cfg, opts, n_dofs, taus);
    } catch (const std::exception& e) {
        nlohmann::json err = {{"command", cmd}, {"status", "error"}, {"error", e.what()}};
        if (const auto* sf = dynamic_cast<const StepFailure*>(&e))
            err["step"] = sf->step();
        std::cerr << err.dump(2) << "\n";
        return 2;
    }
    return 0;
}
