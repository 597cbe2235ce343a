#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsobs/model.hpp"
#include "tsobs/synth.hpp"

namespace tsobs {

// ============================================================================
// input signals
// ============================================================================
//
// Deterministic open-loop inputs. Steps holds a piecewise-constant schedule:
// the value is the last entry whose time is <= t, and zero before the first.

struct InputSignal {
    enum class Kind { Zero, Constant, Sine, Steps };

    Kind kind = Kind::Zero;
    std::vector<double> values;  // Constant level or Sine amplitudes
    double frequency = 0.0;      // rad/s, Sine
    double phase = 0.0;          // rad, Sine
    std::vector<std::pair<double, std::vector<double>>> steps;  // ascending times

    static InputSignal zero();
    static InputSignal constant(std::vector<double> level);
    static InputSignal sine(std::vector<double> amplitude, double frequency, double phase = 0.0);
    static InputSignal step_schedule(std::vector<std::pair<double, std::vector<double>>> steps);

    // u(t) with the input dimension supplied by the model. Throws
    // ShapeMismatch when the stored vectors disagree with it.
    std::vector<double> at(double t, std::size_t m_u) const;
};

// ============================================================================
// configuration and results
// ============================================================================

struct SimConfig {
    double dt = 1e-3;
    double t_end = 20.0;
    std::vector<double> x0;
    std::vector<double> xhat0;
    InputSignal input;
    std::optional<Box> box;         // containment region, enforced by simulate_theorem2
    std::size_t record_stride = 1;  // keep every k-th sample; the last one is always kept
};

enum class StopReason { Completed, SingularBlend, BoxExit, InputBoundViolated };

struct Termination {
    StopReason reason = StopReason::Completed;
    double time = 0.0;  // when the run stopped early
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;    // plant x
    std::vector<std::vector<double>> observer;  // estimate xhat
    std::vector<std::vector<double>> errors;    // x - xhat, entrywise exact
    std::vector<double> error_norms;
    std::vector<double> lyapunov;  // V samples; see the simulate functions
    Termination termination;
};

// One classical Runge-Kutta update; the evaluator runs exactly four times, at
// t, t + dt/2 (twice), and t + dt. Anything the evaluator throws propagates.
using StateFn = std::function<std::vector<double>(double t, const std::vector<double>& state)>;
std::vector<double> rk4_step(const StateFn& derivative, const std::vector<double>& state, double t, double dt);

// ============================================================================
// closed-loop simulation
// ============================================================================
//
// Both simulators integrate plant and observer as one coupled system with
// fixed-step RK4 and record every record_stride-th sample plus the final one.
//
// Measured premises: both sides blend with memberships at the true state,
// the observer adds the blended injection L(z)(y - yhat), and V = e^T P1 e is
// recorded. The run aborts with SingularBlend when the blended E(z) has an
// estimated condition number above 1e10 at any stage evaluation.
Trajectory simulate_theorem1(const TsDescriptorModel& model, const Theorem1Certificate& certificate,
                             const SimConfig& cfg);

// Unmeasured premises: the single E is factored once; the plant runs in
// centroid-plus-deviation form (checked each evaluation against the direct
// blend); the observer evaluates memberships at the estimate and injects
// sum_i h_i(xhat) L_i (y - yhat). The run aborts with BoxExit when either
// state leaves cfg.box and with InputBoundViolated when ||u(t)|| exceeds the
// certified input bound. V records e^T sym(E^T P) e under the descriptor
// structure and e^T P e without it.
Trajectory simulate_theorem2(const TsDescriptorModel& model, const Theorem2Certificate& certificate,
                             const CentroidDecomposition& decomp, const SimConfig& cfg);

// ============================================================================
// export
// ============================================================================

// Header t,x1..xn,xhat1..xhatn,e1..en,norm_e[,V], one row per recorded
// sample, 17 significant digits, LF line endings. The V column appears
// exactly when Lyapunov samples were recorded.
std::string trajectory_to_csv(const Trajectory& trajectory);

}  // namespace tsobs
