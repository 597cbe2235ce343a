#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsobs/model.hpp"

namespace tsobs {

// ============================================================================
// certified weighting-function bounds
// ============================================================================
//
// For each rule i the unmeasured-premise synthesis needs two Lipschitz-style
// constants valid on a state box:
//   n_i bounds the gradient norm of h_i, so |h_i(a) - h_i(b)| <= n_i |a - b|,
//   m_i bounds the map x -> h_i(x) x, so |h_i(a) a - h_i(b) b| <= m_i |a - b|.
// Both are estimated by maximizing the exact analytic derivative over a
// lattice and inflating by a safety factor.

// How the suprema were obtained: Analytic means closed-form gradients were
// maximized over the lattice; Sampled is reserved for membership kinds
// without derivatives (none exist today, so estimators always record
// Analytic).
enum class BoundsMethod { Analytic, Sampled };

struct LipschitzBounds {
    std::vector<double> m;       // per-rule bound for x -> h_i(x) x
    std::vector<double> n;       // per-rule bound for h_i itself
    double beta1 = 0.0;          // input norm bound, set by the caller
    Box box;                     // region the bounds are valid on
    BoundsMethod method = BoundsMethod::Analytic;
    double safety = 1.0;         // inflation applied to the lattice suprema
    std::size_t density = 0;     // lattice points per axis used
};

struct EstimateOptions {
    std::size_t density = 41;    // odd densities include the box center
    double safety = 1.05;
};

LipschitzBounds estimate_constants(const TsDescriptorModel& model, const Box& box,
                                   const EstimateOptions& options = {});

// Empirical spot check of the two bound families on random point pairs drawn
// from the box. Reports the worst observed ratio |f(a)-f(b)| / (bound |a-b|)
// per rule; a ratio above 1 means the certified constant was violated.
struct HypothesisCheck {
    std::vector<double> worst_ratio_m;
    std::vector<double> worst_ratio_n;
    bool ok = true;              // all ratios <= 1
    std::size_t pairs = 0;
};

HypothesisCheck check_hypothesis(const TsDescriptorModel& model, const LipschitzBounds& bounds,
                                 std::size_t pairs = 2000, std::uint64_t seed = 1);

}  // namespace tsobs
