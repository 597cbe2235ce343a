#include <cstdio>

#include "CLI11.hpp"
#include "tsobs/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Observer synthesis, verification, and simulation for TS descriptor systems"};
    app.require_subcommand(1);

    tsobs::cli::ValidateArgs va;
    CLI::App* validate = app.add_subcommand("validate", "Check a model file structurally and on a sample lattice");
    validate->add_option("model", va.model_path, "model file")->required();
    validate->add_option("--box", va.box, "sampling box, lo:hi or l1:u1,l2:u2,... (default -2:2)");
    validate->add_option("--samples", va.samples, "lattice sample budget (default 1000)");

    tsobs::cli::SynthesizeArgs sy;
    CLI::App* synthesize = app.add_subcommand("synthesize", "Design observer gains with a feasibility certificate");
    synthesize->add_option("model", sy.model_path, "model file")->required();
    synthesize->add_option("--theorem", sy.theorem, "1 = measured premises, 2 = unmeasured (default 1)");
    synthesize->add_option("--centroid", sy.centroid, "mean | sum (default mean)");
    synthesize->add_option("--equality-mode", sy.equality_mode, "descriptor | none (default descriptor)");
    synthesize->add_option("--box", sy.box, "theorem 2: box the slope bounds are certified on");
    synthesize->add_option("--beta1", sy.beta1, "theorem 2: input norm bound");
    synthesize->add_option("--safety", sy.safety, "theorem 2: slope-bound inflation (default 1.05)");
    synthesize->add_option("--density", sy.density, "theorem 2: lattice points per axis (default 41)");
    synthesize->add_option("--tol", sy.tol, "solver tolerance (default 1e-7)");
    synthesize->add_option("--out", sy.out, "write the certificate here");

    tsobs::cli::VerifyArgs ve;
    CLI::App* verify = app.add_subcommand("verify", "Re-evaluate every condition at a stored certificate");
    verify->add_option("model", ve.model_path, "model file")->required();
    verify->add_option("certificate", ve.certificate_path, "certificate file")->required();
    verify->add_option("--tol", ve.tol, "pass tolerance (default 0)");

    tsobs::cli::SimulateArgs si;
    CLI::App* simulate = app.add_subcommand("simulate", "Run plant plus observer closed loop");
    simulate->add_option("model", si.model_path, "model file")->required();
    simulate->add_option("certificate", si.certificate_path, "certificate file")->required();
    simulate->add_option("--x0", si.x0, "plant initial state v1,v2,... (default zeros)");
    simulate->add_option("--xhat0", si.xhat0, "observer initial state (default zeros)");
    simulate->add_option("--input", si.input, "zero | const:v1,... | sine:amp,freq[,phase] (default zero)");
    simulate->add_option("--box", si.box, "containment box (default: the certificate's)");
    simulate->add_option("--dt", si.dt, "step size (default 1e-3)");
    simulate->add_option("--t-end", si.t_end, "horizon (default 20)");
    simulate->add_option("--stride", si.stride, "record every kth sample (default 1)");
    simulate->add_option("--out", si.out, "write the trajectory CSV here");

    tsobs::cli::BoundsArgs bo;
    CLI::App* bounds = app.add_subcommand("bounds", "Certify weighting-function slope bounds on a box");
    bounds->add_option("model", bo.model_path, "model file")->required();
    bounds->add_option("--box", bo.box, "certification box (default -2:2)");
    bounds->add_option("--safety", bo.safety, "inflation factor (default 1.05)");
    bounds->add_option("--density", bo.density, "lattice points per axis (default 41)");
    bounds->add_option("--pairs", bo.pairs, "random pairs for the spot check (default 2000)");

    tsobs::cli::DemoArgs de;
    CLI::App* demo = app.add_subcommand("demo", "Run a bundled example end to end");
    demo->add_option("name", de.name, "example1 | example2")->required();
    demo->add_option("--out-dir", de.out_dir, "directory for certificate, CSV, and summary (default .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help and version exit clean; everything else is a usage error
    }

    tsobs::cli::CommandOutcome out;
    if (validate->parsed()) out = tsobs::cli::cmd_validate(va);
    else if (synthesize->parsed()) out = tsobs::cli::cmd_synthesize(sy);
    else if (verify->parsed()) out = tsobs::cli::cmd_verify(ve);
    else if (simulate->parsed()) out = tsobs::cli::cmd_simulate(si);
    else if (bounds->parsed()) out = tsobs::cli::cmd_bounds(bo);
    else if (demo->parsed()) out = tsobs::cli::cmd_demo(de);

    std::fputs(out.report.c_str(), stdout);
    return out.exit_code;
}
