#pragma once

#include <cstddef>
#include <vector>

#include "tsobs/lmi.hpp"

namespace tsobs {

// ============================================================================
// feasibility solver
// ============================================================================
//
// Phase method on the lowered standard form: minimize t subject to
// F_j(x) <= t I per block and r_i(x) + t >= 0 per row, by damped Newton on the
// log-det barrier with a shrinking centering weight. Any t below zero proves
// strict feasibility of the closed problem; the dual bound t_c - mu nu at an
// (approximately) centered point proves infeasibility once it clears the
// tolerance. Everything is deterministic: fixed starting point, fixed step
// rule, no randomness.

enum class SolveStatus { Feasible, Infeasible, IterationLimit };

struct SolveOptions {
    double tolerance = 1e-7;          // decision threshold on the phase objective
    double margin_target = 0.0;       // ask for t < -max(tolerance, margin_target)
    std::size_t max_newton_steps = 200;
};

struct SolveResult {
    SolveStatus status = SolveStatus::IterationLimit;
    std::vector<double> point;            // best point found
    double phase_objective = 0.0;         // final normalized t
    double margin = 0.0;                  // margin of `point` on the original blocks
    std::size_t newton_steps = 0;
    std::vector<double> objective_trace;  // best-so-far t after each Newton step
};

SolveResult solve_feasibility(const StandardSdp& sdp, const SolveOptions& options = {});

// ============================================================================
// analytic recentering
// ============================================================================
//
// Damped Newton on the barrier of the feasible set itself, started from a
// strictly feasible point. Returns the best-margin iterate seen (including
// the start, so the margin never gets worse). Feasible sets of homogeneous
// problems are cones without an analytic center; a divergence guard on the
// iterate norm stops the walk and keeps the best point in that case.

struct RecenterOptions {
    std::size_t max_newton_steps = 100;
};

struct RecenterResult {
    std::vector<double> point;
    double margin = 0.0;
    std::size_t newton_steps = 0;
};

RecenterResult recenter(const StandardSdp& sdp, const std::vector<double>& start,
                        const RecenterOptions& options = {});

// min over blocks of -max_eig(F_j(x)) and over rows of their value; positive
// exactly when x is strictly inside the closed standard form. Returns the
// 1e300 sentinel when there is nothing to satisfy.
double point_margin(const StandardSdp& sdp, const std::vector<double>& point);

}  // namespace tsobs
