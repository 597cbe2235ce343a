#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsobs/matrix.hpp"
#include "tsobs/membership.hpp"

namespace tsobs {

// Axis-aligned region of state space. Lattice evaluation, validation, and
// runtime containment checks all share this.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    static Box cube(std::size_t n, double lo, double hi);
};

void check_box(const Box& box, std::size_t n);

// Descriptor plant with blended left- and right-hand sides:
//   sum_k v_k(z) E_k xdot = sum_i h_i(z) (A_i x + B_i u),  y = C x.
struct TsDescriptorModel {
    std::size_t n = 0;    // states
    std::size_t m_u = 0;  // inputs
    std::size_t q = 0;    // outputs
    std::size_t r = 0;    // right-hand rules
    std::size_t l = 0;    // left-hand rules
    std::vector<Matrix> E;  // l matrices, n x n
    std::vector<Matrix> A;  // r matrices, n x n
    std::vector<Matrix> B;  // r matrices, n x m_u
    Matrix C;               // q x n
    std::vector<MembershipSpec> h;  // r right memberships
    std::vector<MembershipSpec> v;  // l left memberships
    bool premise_measured = true;
};

// Structural checks: dimension consistency, membership lists well formed, and
// (for unmeasured premises) a single effective E. Throws DimensionMismatch or
// ParseError. load_model runs this; call it after building a model by hand.
void check_model(const TsDescriptorModel& model);

struct Memberships {
    std::vector<double> h;
    std::vector<double> v;
};

Memberships eval_memberships(const TsDescriptorModel& model, const std::vector<double>& z);

struct BlendedVertices {
    Matrix E;
    Matrix A;
    Matrix B;
};

// Convex-ish combinations sum_i h_i A_i etc. The weights are taken as given;
// callers wanting the convex-sum guarantee validate first.
BlendedVertices blend(const TsDescriptorModel& model, const std::vector<double>& h, const std::vector<double>& v);

struct ValidationFinding {
    bool error = false;  // false = warning
    std::string what;
};

struct ValidationReport {
    std::vector<ValidationFinding> findings;
    std::size_t samples_checked = 0;

    bool ok() const;            // no errors (warnings allowed)
    bool has_warnings() const;
    std::string to_string() const;
};

// Samples a deterministic lattice of ceil(samples^(1/n)) points per axis and
// checks: membership sums equal 1 (1e-9), every h_i within [0,1], v_k range
// violations (warning only), and cond(E(z)) <= 1e8 at every sample.
ValidationReport validate(const TsDescriptorModel& model, const Box& box, std::size_t samples);

// Lattice helper shared with the Lipschitz estimator: per-axis coordinate
// values, endpoints included (density >= 2; density 1 degenerates to the
// midpoint).
std::vector<double> lattice_axis(double lo, double hi, std::size_t density);

TsDescriptorModel parse_model(const std::string& text);
TsDescriptorModel load_model(const std::string& path);

// How the vertex family is split into a centroid plus per-rule deviations:
// Mean uses A0 = (1/r) sum A_i, Sum uses A0 = sum A_i. Mean is the default
// everywhere; Sum is kept for compatibility with sources that define the
// centroid as the plain sum.
enum class CentroidMode { Mean, Sum };

struct CentroidDecomposition {
    Matrix A0;
    Matrix B0;
    std::vector<Matrix> Abar;  // A_i - A0
    std::vector<Matrix> Bbar;  // B_i - B0
    CentroidMode mode = CentroidMode::Mean;
};

CentroidDecomposition centroid_decompose(const TsDescriptorModel& model, CentroidMode mode = CentroidMode::Mean);

}  // namespace tsobs
