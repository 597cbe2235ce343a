#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tsobs::cli {

// ============================================================================
// command outcomes
// ============================================================================

// What a command run produced. The report is the full human-readable text the
// tool prints on standard output; artifacts lists every file written. The
// exit code follows one convention everywhere:
//   0  success / feasible / all checks passed
//   1  infeasible, a failed verification, or a simulation that stopped early
//   2  usage mistakes: unparsable files or flags, shape mismatches, missing
//      boxes or bounds, unknown names
//   3  numerical breakdown: singular factorizations, iteration limits
struct CommandOutcome {
    int exit_code = 0;
    std::string report;
    std::vector<std::string> artifacts;
};

// ============================================================================
// argument bundles
// ============================================================================
//
// One struct per command, field names mirroring the long flags. String
// specs use the shared mini-grammars:
//   box    "lo:hi" (every axis) or "l1:u1,l2:u2,..." (one pair per axis)
//   vector "v1,v2,..."
//   input  "zero" | "const:v1,v2,..." | "sine:amp,freq[,phase]" (uniform
//          amplitude across input channels)

struct ValidateArgs {
    std::string model_path;
    std::string box;              // empty: [-2,2] on every axis
    std::size_t samples = 1000;
};

struct SynthesizeArgs {
    std::string model_path;
    int theorem = 1;
    std::string centroid = "mean";         // "mean" | "sum"
    std::string equality_mode = "descriptor";  // "descriptor" | "none"
    std::string box;              // theorem 2: region the slope bounds are certified on
    double beta1 = 0.0;           // theorem 2: input norm bound
    double safety = 1.05;         // theorem 2: slope-bound inflation
    std::size_t density = 41;     // theorem 2: lattice points per axis
    double tol = 1e-7;
    std::string out;              // certificate file
};

struct VerifyArgs {
    std::string model_path;
    std::string certificate_path;
    double tol = 0.0;
};

struct SimulateArgs {
    std::string model_path;
    std::string certificate_path;
    std::string x0;               // empty: all zeros
    std::string xhat0;            // empty: all zeros
    std::string input = "zero";
    std::string box;              // empty: the box stored with the certificate
    double dt = 1e-3;
    double t_end = 20.0;
    std::size_t stride = 1;
    std::string out;              // CSV file
};

struct BoundsArgs {
    std::string model_path;
    std::string box;              // empty: [-2,2] on every axis
    double safety = 1.05;
    std::size_t density = 41;
    std::size_t pairs = 2000;     // random pairs for the hypothesis spot check
};

struct DemoArgs {
    std::string name;             // "example1" | "example2"
    std::string out_dir = ".";    // receives <name>.cert, <name>.csv, <name>.summary.txt
};

// ============================================================================
// commands
// ============================================================================
//
// Each command is a pure function of its arguments plus the named files; the
// only side effects are the declared artifact writes. Failures never throw:
// they come back as an outcome whose report carries the error text.

// Structural and sampled checks of a model file. Exit 0 when validation
// passes (range warnings allowed), 1 when it finds errors.
CommandOutcome cmd_validate(const ValidateArgs& args);

// End-to-end synthesis: assemble the observer conditions, solve, recover
// gains, re-verify, and print margins and gains. Theorem 2 first certifies
// slope bounds on --box with --beta1. Exit 1 when the conditions are
// infeasible, 3 when the solver gives up.
CommandOutcome cmd_synthesize(const SynthesizeArgs& args);

// Re-evaluate every condition at a stored certificate and report residuals.
// Exit 0 iff all pass at --tol.
CommandOutcome cmd_verify(const VerifyArgs& args);

// Closed-loop run of plant plus observer under the given input; writes the
// trajectory as CSV when --out is set. The certificate type picks the
// observer. Exit 1 when the run stops before t_end.
CommandOutcome cmd_simulate(const SimulateArgs& args);

// Certified weighting-function slope bounds plus a random-pair spot check.
CommandOutcome cmd_bounds(const BoundsArgs& args);

// The two bundled end-to-end runs: synthesize, verify, simulate, write
// artifacts. example2 retries with the descriptor equality dropped when the
// strict mode is infeasible. Exit 0 iff every stage passes.
CommandOutcome cmd_demo(const DemoArgs& args);

}  // namespace tsobs::cli
