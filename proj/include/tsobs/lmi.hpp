#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsobs/lipschitz.hpp"
#include "tsobs/matrix.hpp"
#include "tsobs/model.hpp"

namespace tsobs {

// ============================================================================
// decision variables
// ============================================================================

enum class VariableShape { Symmetric, Rectangular, Scalar };

struct VariableDecl {
    std::string name;
    VariableShape shape = VariableShape::Scalar;
    std::size_t rows = 1;
    std::size_t cols = 1;
    bool positive = false;  // matrices: definite, scalars: strictly positive

    static VariableDecl symmetric(const std::string& name, std::size_t n, bool positive = false);
    static VariableDecl rectangular(const std::string& name, std::size_t rows, std::size_t cols);
    static VariableDecl scalar(const std::string& name, bool positive = false);

    // Free entries: n(n+1)/2 for symmetric, rows*cols for rectangular, 1 for scalar.
    std::size_t entry_count() const;
};

// Point assignment: every variable maps to a matrix, scalars stored as 1x1.
using Assignment = std::map<std::string, Matrix>;

double scalar_value(const Assignment& point, const std::string& name);

// ============================================================================
// affine expressions
// ============================================================================

// One summand inside a block cell. Matrix terms are coeff * L * op(V) * R with
// optional factors, scalar terms are coeff * x * W, constants stand alone.
struct AffineTerm {
    enum class Kind { Constant, MatrixProduct, ScalarWeight };

    Kind kind = Kind::Constant;
    double coeff = 1.0;
    Matrix constant;              // Constant payload
    std::string var;              // variable name for the other kinds
    bool transposed = false;      // MatrixProduct: use V^T
    std::optional<Matrix> left;   // MatrixProduct: optional left factor
    std::optional<Matrix> right;  // MatrixProduct: optional right factor
    Matrix weight;                // ScalarWeight payload
};

// Readable builders so assembly code mirrors the block formulas.
namespace terms {
AffineTerm c(Matrix m, double s = 1.0);                                   // s * M
AffineTerm V(const std::string& v, double s = 1.0);                       // s * V
AffineTerm Vt(const std::string& v, double s = 1.0);                      // s * V^T
AffineTerm LV(Matrix l, const std::string& v, double s = 1.0);            // s * L * V
AffineTerm LVt(Matrix l, const std::string& v, double s = 1.0);           // s * L * V^T
AffineTerm VR(const std::string& v, Matrix r, double s = 1.0);            // s * V * R
AffineTerm VtR(const std::string& v, Matrix r, double s = 1.0);           // s * V^T * R
AffineTerm LVR(Matrix l, const std::string& v, Matrix r, double s = 1.0); // s * L * V * R
AffineTerm xW(const std::string& v, Matrix w, double s = 1.0);            // s * x * W
}  // namespace terms

AffineTerm transposed_term(const AffineTerm& t);

// A block grid of affine cells. Symmetric expressions are evaluated by
// computing every cell, checking the result is symmetric up to rounding, and
// mirroring the upper triangle so the returned matrix is bitwise symmetric.
struct AffineMatrixExpr {
    std::vector<std::size_t> row_sizes;
    std::vector<std::size_t> col_sizes;
    std::vector<std::vector<std::vector<AffineTerm>>> cells;  // [bi][bj] -> terms
    bool symmetric = false;

    static AffineMatrixExpr grid(std::vector<std::size_t> row_sizes, std::vector<std::size_t> col_sizes,
                                 bool symmetric);
    static AffineMatrixExpr single(std::size_t rows, std::size_t cols, bool symmetric);

    void add(std::size_t bi, std::size_t bj, AffineTerm term);
    // Adds the term at (bi, bj) and its transpose at (bj, bi).
    void add_pair(std::size_t bi, std::size_t bj, const AffineTerm& term);

    std::size_t rows() const;
    std::size_t cols() const;
};

Matrix evaluate_expr(const AffineMatrixExpr& expr, const Assignment& point);

// Scalar affine expression: constant + sum coeff * V(row, col).
struct AffineScalarTerm {
    std::string var;
    std::size_t row = 0;
    std::size_t col = 0;
    double coeff = 1.0;
};

struct AffineScalarExpr {
    double constant = 0.0;
    std::vector<AffineScalarTerm> terms;
};

double evaluate_scalar_expr(const AffineScalarExpr& expr, const Assignment& point);

// ============================================================================
// problems
// ============================================================================

enum class Sense { StrictlyNegative, StrictlyPositive };

struct LmiConstraint {
    std::string id;
    AffineMatrixExpr expr;
    Sense sense = Sense::StrictlyNegative;
};

struct LinearInequality {  // expr >= 0
    std::string id;
    AffineScalarExpr expr;
};

struct LinearEquality {  // expr == 0 entrywise
    std::string id;
    AffineMatrixExpr expr;
};

struct AffineLmiProblem {
    std::vector<VariableDecl> variables;
    std::vector<LmiConstraint> constraints;
    std::vector<LinearInequality> inequalities;
    std::vector<LinearEquality> equalities;
    // Margin used when strict cone constraints are closed during lowering.
    // Zero means "derive from the problem data at lower() time".
    double strictness_epsilon = 0.0;

    const VariableDecl& variable(const std::string& name) const;
    bool has_variable(const std::string& name) const;
    std::size_t coordinate_count() const;  // free entries across all variables
};

// ============================================================================
// residual evaluation
// ============================================================================

// Signed satisfaction measure per requirement, negative meaning satisfied
// with margin for all strict kinds. Equalities report the max-abs violation,
// which is nonnegative by construction.
enum class ResidualKind { Lmi, Positivity, Inequality, Equality };

struct ResidualEntry {
    std::string id;
    ResidualKind kind = ResidualKind::Lmi;
    double residual = 0.0;
};

std::vector<ResidualEntry> evaluate(const AffineLmiProblem& problem, const Assignment& point);

double worst_residual(const std::vector<ResidualEntry>& entries);

// ============================================================================
// lowering to standard form
// ============================================================================

struct CoordinateRef {
    std::string var;
    std::size_t row = 0;
    std::size_t col = 0;
};

// min c.x subject to F0 + sum x_k Fk <= 0 per block and a.x + b >= 0 per row.
// Strictness is already folded in: interior points of this closed problem are
// strictly feasible points of the source problem.
struct StandardSdp {
    struct Block {
        std::string id;
        Matrix f0;
        std::vector<Matrix> coeffs;
    };
    struct Row {
        std::string id;
        std::vector<double> a;
        double b = 0.0;
    };

    std::size_t dimension = 0;
    std::vector<double> objective;  // all zero for feasibility problems
    std::vector<Block> blocks;
    std::vector<Row> rows;
    double strictness_epsilon = 0.0;

    // Recovery of the original variables: w = offset + basis * x, with
    // free_coordinates giving the bijection x_k = w[free_coordinates[k]].
    std::vector<VariableDecl> variables;
    std::vector<CoordinateRef> coordinates;    // layout of w
    std::vector<double> recover_offset;        // w at x = 0
    Matrix recover_basis;                      // coordinates.size() x dimension
    std::vector<std::size_t> free_coordinates;

    Assignment recover(const std::vector<double>& point) const;
};

StandardSdp lower(const AffineLmiProblem& problem);

// ============================================================================
// observer synthesis assemblies
// ============================================================================

// Measured-premise observer conditions: one symmetric 2n x 2n block per
// vertex pair (i, k) in the variables P1 (symmetric, definite), P3 (square)
// and one output-injection slack Y3_i per rule.
AffineLmiProblem assemble_theorem1(const TsDescriptorModel& model);

enum class EqualityMode { None, Descriptor };

// Unmeasured-premise observer conditions around a centroid decomposition: a
// per-rule stability block in (P, Q, K_i), a per-rule deviation block mixing
// the Lipschitz constants with scalars lambda1, lambda2, gamma, and the input
// attenuation row gamma - beta1 * lambda2 >= 0. Descriptor mode adds the
// structural coupling E^T P = P E with sym(E^T P) definite, which makes the
// quadratic form e^T E^T P e a valid Lyapunov candidate.
AffineLmiProblem assemble_theorem2(const TsDescriptorModel& model, const CentroidDecomposition& centroid,
                                   const LipschitzBounds& bounds, EqualityMode equality_mode);

}  // namespace tsobs
