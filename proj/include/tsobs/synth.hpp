#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "tsobs/lipschitz.hpp"
#include "tsobs/lmi.hpp"
#include "tsobs/matrix.hpp"
#include "tsobs/model.hpp"
#include "tsobs/sdp.hpp"

namespace tsobs {

// ============================================================================
// certificates
// ============================================================================

// Verified feasible point of the measured-premise observer conditions plus
// the recovered gains. margins holds the residuals re-evaluated at this
// point; every synthesized certificate has all of them strictly satisfied.
struct Theorem1Certificate {
    Matrix P1;                          // symmetric, positive definite
    Matrix P3;
    std::vector<Matrix> Y3;             // slack variables, Y3_i = P3^T L_i
    std::vector<Matrix> L;              // observer gains
    std::vector<ResidualEntry> margins;
    std::size_t newton_steps = 0;
};

// Verified feasible point of the unmeasured-premise conditions. The
// Lipschitz bounds it was proved against ride along so simulation can
// enforce box containment and the input bound at runtime.
struct Theorem2Certificate {
    Matrix P;                           // symmetric, positive definite
    Matrix Q;                           // symmetric, positive definite
    std::vector<Matrix> K;              // slack variables, K_i = P L_i
    std::vector<Matrix> L;              // observer gains
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double gamma = 0.0;
    double rho = 0.0;                   // gamma / lambda2, input attenuation level
    EqualityMode equality_mode = EqualityMode::None;
    CentroidMode centroid_mode = CentroidMode::Mean;
    LipschitzBounds bounds;             // empty (beta1 = 0) when a parsed file omits them
    std::vector<ResidualEntry> margins;
    std::size_t newton_steps = 0;

    bool has_bounds() const;
};

// ============================================================================
// synthesis
// ============================================================================

// Assembles the measured-premise conditions, solves, recenters, recovers the
// gains from P3^T L_i = Y3_i, and re-verifies everything at the recovered
// point. Throws Infeasible when the solver certifies infeasibility,
// NumericalFailure on an iteration-limit verdict, SingularP3 if the slack
// cannot be inverted, and VerificationFailed if the returned point does not
// independently satisfy every condition.
Theorem1Certificate synthesize_theorem1(const TsDescriptorModel& model, const SolveOptions& options = {});

// Same pipeline for the unmeasured-premise conditions around a centroid
// decomposition; gains come from L_i = P^{-1} K_i and the attenuation level
// is rho = gamma / lambda2. The bounds must be certified on a box and carry
// beta1 > 0. Throws Infeasible, NumericalFailure, SingularP, or
// VerificationFailed as above, plus whatever assembly rejects.
Theorem2Certificate synthesize_theorem2(const TsDescriptorModel& model, const LipschitzBounds& bounds,
                                        CentroidMode mode = CentroidMode::Mean,
                                        EqualityMode equality_mode = EqualityMode::Descriptor,
                                        const SolveOptions& options = {});

// ============================================================================
// verification
// ============================================================================

struct VerificationItem {
    std::string id;
    ResidualKind kind = ResidualKind::Lmi;
    double residual = 0.0;
    bool passed = false;
};

// Pass rules at tolerance tau: strict kinds (blocks, positivity) need
// residual < tau, the closed inequality rows need residual <= tau, and
// equalities need residual <= max(tau, rounding allowance) where the
// allowance is 1e-9 * (1 + largest certificate entry). The allowance absorbs
// floating-point noise at recovered points and never a real violation.
struct VerificationReport {
    std::vector<VerificationItem> items;
    double tolerance = 0.0;
    double worst_residual = 0.0;
    bool passed = false;

    std::string to_string() const;  // one line per item, stable order
};

// Rebuilds the conditions from the model, substitutes the certificate with
// the slack recomputed from the gains (Y3_i = P3^T L_i, K_i = P L_i), and
// reports every residual with a pass/fail verdict. Throws ShapeMismatch when
// the certificate does not fit the model.
VerificationReport verify_certificate(const TsDescriptorModel& model, const Theorem1Certificate& cert,
                                      double tolerance = 0.0);
VerificationReport verify_certificate(const TsDescriptorModel& model, const Theorem2Certificate& cert,
                                      const LipschitzBounds& bounds, double tolerance = 0.0);
// Convenience overload using the bounds stored in the certificate; throws
// MissingBox when the certificate does not carry any.
VerificationReport verify_certificate(const TsDescriptorModel& model, const Theorem2Certificate& cert,
                                      double tolerance = 0.0);

// ============================================================================
// serialization
// ============================================================================
//
// Certificates persist as structured text in the same format family as the
// model files. Matrices and scalars are written to 12 significant digits;
// re-parsing reproduces the written values exactly. Files produced by older
// tools may omit the slack, rho, bounds, margins, and step count; parsing
// fills the slack and rho from the gains and leaves the rest empty.

using Certificate = std::variant<Theorem1Certificate, Theorem2Certificate>;

std::string certificate_to_text(const Theorem1Certificate& cert);
std::string certificate_to_text(const Theorem2Certificate& cert);
Certificate parse_certificate(const std::string& text);
Certificate load_certificate(const std::string& path);

}  // namespace tsobs
