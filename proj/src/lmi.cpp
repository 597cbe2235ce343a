#include "tsobs/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "tsobs/errors.hpp"
#include "tsobs/numerics.hpp"

namespace tsobs {

// ============================================================================
// variables
// ============================================================================

VariableDecl VariableDecl::symmetric(const std::string& name, std::size_t n, bool positive) {
    VariableDecl d;
    d.name = name;
    d.shape = VariableShape::Symmetric;
    d.rows = n;
    d.cols = n;
    d.positive = positive;
    return d;
}

VariableDecl VariableDecl::rectangular(const std::string& name, std::size_t rows, std::size_t cols) {
    VariableDecl d;
    d.name = name;
    d.shape = VariableShape::Rectangular;
    d.rows = rows;
    d.cols = cols;
    return d;
}

VariableDecl VariableDecl::scalar(const std::string& name, bool positive) {
    VariableDecl d;
    d.name = name;
    d.shape = VariableShape::Scalar;
    d.positive = positive;
    return d;
}

std::size_t VariableDecl::entry_count() const {
    switch (shape) {
        case VariableShape::Symmetric: return rows * (rows + 1) / 2;
        case VariableShape::Rectangular: return rows * cols;
        case VariableShape::Scalar: return 1;
    }
    return 1;
}

double scalar_value(const Assignment& point, const std::string& name) {
    auto it = point.find(name);
    if (it == point.end()) fail(ErrorKind::MissingVariable, "assignment is missing variable " + name);
    if (it->second.rows() != 1 || it->second.cols() != 1)
        fail(ErrorKind::ShapeMismatch, "variable " + name + " is not scalar");
    return it->second(0, 0);
}

// ============================================================================
// terms
// ============================================================================

namespace terms {

AffineTerm c(Matrix m, double s) {
    AffineTerm t;
    t.kind = AffineTerm::Kind::Constant;
    t.constant = std::move(m);
    t.coeff = s;
    return t;
}

AffineTerm V(const std::string& v, double s) {
    AffineTerm t;
    t.kind = AffineTerm::Kind::MatrixProduct;
    t.var = v;
    t.coeff = s;
    return t;
}

AffineTerm Vt(const std::string& v, double s) {
    AffineTerm t = V(v, s);
    t.transposed = true;
    return t;
}

AffineTerm LV(Matrix l, const std::string& v, double s) {
    AffineTerm t = V(v, s);
    t.left = std::move(l);
    return t;
}

AffineTerm LVt(Matrix l, const std::string& v, double s) {
    AffineTerm t = Vt(v, s);
    t.left = std::move(l);
    return t;
}

AffineTerm VR(const std::string& v, Matrix r, double s) {
    AffineTerm t = V(v, s);
    t.right = std::move(r);
    return t;
}

AffineTerm VtR(const std::string& v, Matrix r, double s) {
    AffineTerm t = Vt(v, s);
    t.right = std::move(r);
    return t;
}

AffineTerm LVR(Matrix l, const std::string& v, Matrix r, double s) {
    AffineTerm t = V(v, s);
    t.left = std::move(l);
    t.right = std::move(r);
    return t;
}

AffineTerm xW(const std::string& v, Matrix w, double s) {
    AffineTerm t;
    t.kind = AffineTerm::Kind::ScalarWeight;
    t.var = v;
    t.weight = std::move(w);
    t.coeff = s;
    return t;
}

}  // namespace terms

AffineTerm transposed_term(const AffineTerm& t) {
    AffineTerm out = t;
    switch (t.kind) {
        case AffineTerm::Kind::Constant:
            out.constant = t.constant.transposed();
            break;
        case AffineTerm::Kind::MatrixProduct:
            out.transposed = !t.transposed;
            out.left = t.right ? std::optional<Matrix>(t.right->transposed()) : std::nullopt;
            out.right = t.left ? std::optional<Matrix>(t.left->transposed()) : std::nullopt;
            break;
        case AffineTerm::Kind::ScalarWeight:
            out.weight = t.weight.transposed();
            break;
    }
    return out;
}

// ============================================================================
// block expressions
// ============================================================================

AffineMatrixExpr AffineMatrixExpr::grid(std::vector<std::size_t> row_sizes, std::vector<std::size_t> col_sizes,
                                        bool symmetric) {
    if (row_sizes.empty() || col_sizes.empty())
        fail(ErrorKind::MalformedProblem, "block grid needs at least one row and one column");
    for (std::size_t s : row_sizes)
        if (s == 0) fail(ErrorKind::MalformedProblem, "block grid has an empty row");
    for (std::size_t s : col_sizes)
        if (s == 0) fail(ErrorKind::MalformedProblem, "block grid has an empty column");
    if (symmetric && row_sizes != col_sizes)
        fail(ErrorKind::MalformedProblem, "symmetric block grid must have matching row and column sizes");
    AffineMatrixExpr e;
    e.row_sizes = std::move(row_sizes);
    e.col_sizes = std::move(col_sizes);
    e.symmetric = symmetric;
    e.cells.assign(e.row_sizes.size(), std::vector<std::vector<AffineTerm>>(e.col_sizes.size()));
    return e;
}

AffineMatrixExpr AffineMatrixExpr::single(std::size_t rows, std::size_t cols, bool symmetric) {
    return grid({rows}, {cols}, symmetric);
}

void AffineMatrixExpr::add(std::size_t bi, std::size_t bj, AffineTerm term) {
    if (bi >= row_sizes.size() || bj >= col_sizes.size())
        fail(ErrorKind::MalformedProblem, "block cell index out of range");
    cells[bi][bj].push_back(std::move(term));
}

void AffineMatrixExpr::add_pair(std::size_t bi, std::size_t bj, const AffineTerm& term) {
    add(bj, bi, transposed_term(term));
    add(bi, bj, term);
}

std::size_t AffineMatrixExpr::rows() const {
    std::size_t n = 0;
    for (std::size_t s : row_sizes) n += s;
    return n;
}

std::size_t AffineMatrixExpr::cols() const {
    std::size_t n = 0;
    for (std::size_t s : col_sizes) n += s;
    return n;
}

namespace {

Matrix term_value(const AffineTerm& t, const Assignment& point, std::size_t cell_rows, std::size_t cell_cols) {
    switch (t.kind) {
        case AffineTerm::Kind::Constant: {
            if (t.constant.rows() != cell_rows || t.constant.cols() != cell_cols)
                fail(ErrorKind::ShapeMismatch, "constant term does not fit its block cell");
            return t.coeff * t.constant;
        }
        case AffineTerm::Kind::MatrixProduct: {
            auto it = point.find(t.var);
            if (it == point.end()) fail(ErrorKind::MissingVariable, "assignment is missing variable " + t.var);
            Matrix v = t.transposed ? it->second.transposed() : it->second;
            if (t.left) {
                if (t.left->cols() != v.rows())
                    fail(ErrorKind::ShapeMismatch, "left factor does not match variable " + t.var);
                v = *t.left * v;
            }
            if (t.right) {
                if (v.cols() != t.right->rows())
                    fail(ErrorKind::ShapeMismatch, "right factor does not match variable " + t.var);
                v = v * *t.right;
            }
            if (v.rows() != cell_rows || v.cols() != cell_cols)
                fail(ErrorKind::ShapeMismatch, "matrix term for " + t.var + " does not fit its block cell");
            v *= t.coeff;
            return v;
        }
        case AffineTerm::Kind::ScalarWeight: {
            double x = scalar_value(point, t.var);
            if (t.weight.rows() != cell_rows || t.weight.cols() != cell_cols)
                fail(ErrorKind::ShapeMismatch, "weight of scalar term " + t.var + " does not fit its block cell");
            return (t.coeff * x) * t.weight;
        }
    }
    fail(ErrorKind::MalformedProblem, "unknown term kind");
}

}  // namespace

Matrix evaluate_expr(const AffineMatrixExpr& expr, const Assignment& point) {
    const std::size_t nbr = expr.row_sizes.size();
    const std::size_t nbc = expr.col_sizes.size();
    std::vector<std::size_t> roff(nbr + 1, 0), coff(nbc + 1, 0);
    for (std::size_t i = 0; i < nbr; ++i) roff[i + 1] = roff[i] + expr.row_sizes[i];
    for (std::size_t j = 0; j < nbc; ++j) coff[j + 1] = coff[j] + expr.col_sizes[j];

    Matrix out(roff[nbr], coff[nbc]);
    for (std::size_t bi = 0; bi < nbr; ++bi) {
        for (std::size_t bj = 0; bj < nbc; ++bj) {
            Matrix cell(expr.row_sizes[bi], expr.col_sizes[bj]);
            for (const AffineTerm& t : expr.cells[bi][bj])
                cell += term_value(t, point, expr.row_sizes[bi], expr.col_sizes[bj]);
            out.set_block(roff[bi], coff[bj], cell);
        }
    }

    if (expr.symmetric) {
        // The grid must be symmetric up to rounding by construction; mirroring
        // then makes the result bitwise symmetric regardless of summation order.
        double asym = 0.0;
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = i + 1; j < out.cols(); ++j)
                asym = std::max(asym, std::abs(out(i, j) - out(j, i)));
        if (asym > 1e-8 * (1.0 + out.max_abs()))
            fail(ErrorKind::MalformedProblem, "expression marked symmetric evaluates to an asymmetric matrix");
        out.mirror_upper();
    }
    return out;
}

double evaluate_scalar_expr(const AffineScalarExpr& expr, const Assignment& point) {
    double v = expr.constant;
    for (const AffineScalarTerm& t : expr.terms) {
        auto it = point.find(t.var);
        if (it == point.end()) fail(ErrorKind::MissingVariable, "assignment is missing variable " + t.var);
        if (t.row >= it->second.rows() || t.col >= it->second.cols())
            fail(ErrorKind::ShapeMismatch, "scalar term indexes outside variable " + t.var);
        v += t.coeff * it->second(t.row, t.col);
    }
    return v;
}

// ============================================================================
// problems
// ============================================================================

const VariableDecl& AffineLmiProblem::variable(const std::string& name) const {
    for (const VariableDecl& v : variables)
        if (v.name == name) return v;
    fail(ErrorKind::MissingVariable, "problem has no variable " + name);
}

bool AffineLmiProblem::has_variable(const std::string& name) const {
    for (const VariableDecl& v : variables)
        if (v.name == name) return true;
    return false;
}

std::size_t AffineLmiProblem::coordinate_count() const {
    std::size_t n = 0;
    for (const VariableDecl& v : variables) n += v.entry_count();
    return n;
}

namespace {

void check_problem(const AffineLmiProblem& problem) {
    if (problem.variables.empty()) fail(ErrorKind::MalformedProblem, "problem has no decision variables");
    for (std::size_t i = 0; i < problem.variables.size(); ++i) {
        const VariableDecl& v = problem.variables[i];
        if (v.name.empty()) fail(ErrorKind::MalformedProblem, "variable with empty name");
        if (v.rows == 0 || v.cols == 0) fail(ErrorKind::MalformedProblem, "variable " + v.name + " has empty shape");
        if (v.shape == VariableShape::Symmetric && v.rows != v.cols)
            fail(ErrorKind::MalformedProblem, "symmetric variable " + v.name + " is not square");
        if (v.shape == VariableShape::Scalar && (v.rows != 1 || v.cols != 1))
            fail(ErrorKind::MalformedProblem, "scalar variable " + v.name + " is not 1x1");
        if (v.positive && v.shape == VariableShape::Rectangular)
            fail(ErrorKind::MalformedProblem, "positivity flag on rectangular variable " + v.name);
        for (std::size_t j = i + 1; j < problem.variables.size(); ++j)
            if (problem.variables[j].name == v.name)
                fail(ErrorKind::MalformedProblem, "duplicate variable " + v.name);
    }
    for (const LmiConstraint& c : problem.constraints)
        if (c.expr.rows() != c.expr.cols())
            fail(ErrorKind::ShapeMismatch, "cone constraint " + c.id + " is not square");
}

void check_point(const AffineLmiProblem& problem, const Assignment& point) {
    for (const VariableDecl& v : problem.variables) {
        auto it = point.find(v.name);
        if (it == point.end()) fail(ErrorKind::MissingVariable, "assignment is missing variable " + v.name);
        const Matrix& m = it->second;
        if (m.rows() != v.rows || m.cols() != v.cols)
            fail(ErrorKind::ShapeMismatch, "variable " + v.name + " has the wrong shape in the assignment");
        if (!m.all_finite()) fail(ErrorKind::NonFinite, "variable " + v.name + " has non-finite entries");
        if (v.shape == VariableShape::Symmetric) {
            double asym = 0.0;
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = i + 1; j < m.cols(); ++j)
                    asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
            if (asym > 1e-9 * (1.0 + m.max_abs()))
                fail(ErrorKind::ShapeMismatch, "symmetric variable " + v.name + " has an asymmetric value");
        }
    }
}

}  // namespace

// ============================================================================
// residual evaluation
// ============================================================================

std::vector<ResidualEntry> evaluate(const AffineLmiProblem& problem, const Assignment& point) {
    check_problem(problem);
    check_point(problem, point);

    std::vector<ResidualEntry> out;
    for (const LmiConstraint& c : problem.constraints) {
        Matrix m = evaluate_expr(c.expr, point);
        double r = c.sense == Sense::StrictlyNegative ? max_eig(m) : -min_eig(m);
        out.push_back({c.id, ResidualKind::Lmi, r});
    }
    for (const VariableDecl& v : problem.variables) {
        if (!v.positive) continue;
        const Matrix& m = point.at(v.name);
        double r = v.shape == VariableShape::Scalar ? -m(0, 0) : -min_eig(m);
        out.push_back({"pos(" + v.name + ")", ResidualKind::Positivity, r});
    }
    for (const LinearInequality& q : problem.inequalities)
        out.push_back({q.id, ResidualKind::Inequality, -evaluate_scalar_expr(q.expr, point)});
    for (const LinearEquality& e : problem.equalities)
        out.push_back({e.id, ResidualKind::Equality, evaluate_expr(e.expr, point).max_abs()});
    return out;
}

double worst_residual(const std::vector<ResidualEntry>& entries) {
    double w = -std::numeric_limits<double>::infinity();
    for (const ResidualEntry& e : entries) w = std::max(w, e.residual);
    return w;
}

// ============================================================================
// lowering
// ============================================================================

namespace {

struct CoordinateLayout {
    std::vector<CoordinateRef> refs;
    std::map<std::string, std::size_t> var_offset;
};

CoordinateLayout layout_coordinates(const std::vector<VariableDecl>& variables) {
    CoordinateLayout l;
    for (const VariableDecl& v : variables) {
        l.var_offset[v.name] = l.refs.size();
        switch (v.shape) {
            case VariableShape::Symmetric:
                for (std::size_t i = 0; i < v.rows; ++i)
                    for (std::size_t j = i; j < v.cols; ++j) l.refs.push_back({v.name, i, j});
                break;
            case VariableShape::Rectangular:
                for (std::size_t i = 0; i < v.rows; ++i)
                    for (std::size_t j = 0; j < v.cols; ++j) l.refs.push_back({v.name, i, j});
                break;
            case VariableShape::Scalar:
                l.refs.push_back({v.name, 0, 0});
                break;
        }
    }
    return l;
}

std::size_t coordinate_of(const CoordinateLayout& layout, const AffineLmiProblem& problem, const std::string& var,
                          std::size_t row, std::size_t col) {
    const VariableDecl& d = problem.variable(var);
    if (row >= d.rows || col >= d.cols)
        fail(ErrorKind::ShapeMismatch, "entry reference outside variable " + var);
    std::size_t base = layout.var_offset.at(var);
    switch (d.shape) {
        case VariableShape::Scalar: return base;
        case VariableShape::Rectangular: return base + row * d.cols + col;
        case VariableShape::Symmetric: {
            std::size_t i = std::min(row, col), j = std::max(row, col);
            return base + i * d.rows - i * (i - 1) / 2 + (j - i);
        }
    }
    return base;
}

Assignment zero_assignment(const std::vector<VariableDecl>& variables) {
    Assignment a;
    for (const VariableDecl& v : variables) a[v.name] = Matrix(v.rows, v.cols);
    return a;
}

void set_coordinate(Assignment& a, const AffineLmiProblem& problem, const CoordinateRef& ref, double value) {
    const VariableDecl& d = problem.variable(ref.var);
    Matrix& m = a[ref.var];
    m(ref.row, ref.col) = value;
    // Off-diagonal basis directions of symmetric variables carry paired 1s.
    if (d.shape == VariableShape::Symmetric && ref.row != ref.col) m(ref.col, ref.row) = value;
}

double derived_epsilon(const AffineLmiProblem& problem) {
    if (problem.strictness_epsilon > 0.0) return problem.strictness_epsilon;
    double s = 0.0;
    auto absorb_expr = [&s](const AffineMatrixExpr& e) {
        for (const auto& row : e.cells)
            for (const auto& cell : row)
                for (const AffineTerm& t : cell) {
                    if (t.kind == AffineTerm::Kind::Constant) s = std::max(s, t.constant.inf_norm());
                    if (t.kind == AffineTerm::Kind::ScalarWeight) s = std::max(s, t.weight.inf_norm());
                    if (t.left) s = std::max(s, t.left->inf_norm());
                    if (t.right) s = std::max(s, t.right->inf_norm());
                }
    };
    for (const LmiConstraint& c : problem.constraints) absorb_expr(c.expr);
    for (const LinearEquality& e : problem.equalities) absorb_expr(e.expr);
    return 1e-6 * (1.0 + s);
}

}  // namespace

StandardSdp lower(const AffineLmiProblem& problem) {
    check_problem(problem);
    const CoordinateLayout layout = layout_coordinates(problem.variables);
    const std::size_t ncoord = layout.refs.size();
    const double eps = derived_epsilon(problem);
    const Assignment zero = zero_assignment(problem.variables);

    // Strict cone constraints plus materialized definiteness flags, all
    // brought to the form F(w) + eps I <= 0.
    struct Source {
        std::string id;
        AffineMatrixExpr expr;
        double sign;
    };
    std::vector<Source> sources;
    for (const LmiConstraint& c : problem.constraints)
        sources.push_back({c.id, c.expr, c.sense == Sense::StrictlyNegative ? 1.0 : -1.0});
    for (const VariableDecl& v : problem.variables) {
        if (!v.positive || v.shape == VariableShape::Scalar) continue;
        AffineMatrixExpr e = AffineMatrixExpr::single(v.rows, v.cols, true);
        e.add(0, 0, terms::V(v.name));
        sources.push_back({"pos(" + v.name + ")", std::move(e), -1.0});
    }

    struct RawBlock {
        std::string id;
        Matrix f0;
        std::vector<Matrix> coeffs;
    };
    std::vector<RawBlock> raw_blocks;
    for (const Source& s : sources) {
        Matrix m0 = evaluate_expr(s.expr, zero);
        RawBlock b;
        b.id = s.id;
        b.f0 = s.sign * m0 + eps * Matrix::identity(m0.rows());
        b.coeffs.reserve(ncoord);
        for (std::size_t j = 0; j < ncoord; ++j) {
            Assignment a = zero;
            set_coordinate(a, problem, layout.refs[j], 1.0);
            b.coeffs.push_back(s.sign * (evaluate_expr(s.expr, a) - m0));
        }
        raw_blocks.push_back(std::move(b));
    }

    struct RawRow {
        std::string id;
        std::vector<double> a;
        double b;
    };
    std::vector<RawRow> raw_rows;
    for (const LinearInequality& q : problem.inequalities) {
        RawRow r{q.id, std::vector<double>(ncoord, 0.0), q.expr.constant};
        for (const AffineScalarTerm& t : q.expr.terms)
            r.a[coordinate_of(layout, problem, t.var, t.row, t.col)] += t.coeff;
        raw_rows.push_back(std::move(r));
    }
    for (const VariableDecl& v : problem.variables) {
        if (!v.positive || v.shape != VariableShape::Scalar) continue;
        // Strictly positive scalars become the closed row x - eps >= 0.
        RawRow r{"pos(" + v.name + ")", std::vector<double>(ncoord, 0.0), -eps};
        r.a[layout.var_offset.at(v.name)] = 1.0;
        raw_rows.push_back(std::move(r));
    }

    // Equality constraints as linear rows over the full coordinate vector.
    std::vector<std::vector<double>> eqm;
    std::vector<double> eqr;
    for (const LinearEquality& e : problem.equalities) {
        Matrix m0 = evaluate_expr(e.expr, zero);
        std::vector<Matrix> cols;
        cols.reserve(ncoord);
        for (std::size_t j = 0; j < ncoord; ++j) {
            Assignment a = zero;
            set_coordinate(a, problem, layout.refs[j], 1.0);
            cols.push_back(evaluate_expr(e.expr, a) - m0);
        }
        for (std::size_t rr = 0; rr < m0.rows(); ++rr)
            for (std::size_t cc = 0; cc < m0.cols(); ++cc) {
                std::vector<double> row(ncoord, 0.0);
                for (std::size_t j = 0; j < ncoord; ++j) row[j] = cols[j](rr, cc);
                eqm.push_back(std::move(row));
                eqr.push_back(-m0(rr, cc));
            }
    }

    // Gauss-Jordan elimination with partial pivoting. Pivot columns are
    // expressed through the free ones, giving the affine recovery w = w0 + N y.
    const std::size_t neq = eqm.size();
    double mat_scale = 0.0, rhs_scale = 0.0;
    for (std::size_t r = 0; r < neq; ++r) {
        for (double v : eqm[r]) mat_scale = std::max(mat_scale, std::abs(v));
        rhs_scale = std::max(rhs_scale, std::abs(eqr[r]));
    }
    const double pivot_tol = 1e-10 * mat_scale;
    std::vector<std::size_t> pivot_cols;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < ncoord && rank < neq; ++col) {
        std::size_t best = rank;
        double best_val = std::abs(eqm[rank][col]);
        for (std::size_t r = rank + 1; r < neq; ++r)
            if (std::abs(eqm[r][col]) > best_val) {
                best = r;
                best_val = std::abs(eqm[r][col]);
            }
        if (best_val <= pivot_tol) continue;
        std::swap(eqm[rank], eqm[best]);
        std::swap(eqr[rank], eqr[best]);
        const double p = eqm[rank][col];
        for (double& v : eqm[rank]) v /= p;
        eqr[rank] /= p;
        eqm[rank][col] = 1.0;
        for (std::size_t r = 0; r < neq; ++r) {
            if (r == rank) continue;
            const double f = eqm[r][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < ncoord; ++j) eqm[r][j] -= f * eqm[rank][j];
            eqr[r] -= f * eqr[rank];
            eqm[r][col] = 0.0;
        }
        pivot_cols.push_back(col);
        ++rank;
    }
    const double consistency_tol = 1e-9 * (1.0 + mat_scale + rhs_scale);
    for (std::size_t r = rank; r < neq; ++r)
        if (std::abs(eqr[r]) > consistency_tol)
            fail(ErrorKind::InconsistentEqualities, "equality constraints are mutually inconsistent");

    std::vector<bool> is_pivot(ncoord, false);
    for (std::size_t c : pivot_cols) is_pivot[c] = true;
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < ncoord; ++c)
        if (!is_pivot[c]) free_cols.push_back(c);
    if (free_cols.empty())
        fail(ErrorKind::MalformedProblem, "equalities pin every coordinate, nothing is left to optimize");

    std::vector<double> w0(ncoord, 0.0);
    for (std::size_t k = 0; k < rank; ++k) w0[pivot_cols[k]] = eqr[k];
    Matrix basis(ncoord, free_cols.size());
    for (std::size_t fk = 0; fk < free_cols.size(); ++fk) {
        basis(free_cols[fk], fk) = 1.0;
        for (std::size_t k = 0; k < rank; ++k) basis(pivot_cols[k], fk) = -eqm[k][free_cols[fk]];
    }

    StandardSdp sdp;
    sdp.dimension = free_cols.size();
    sdp.objective.assign(sdp.dimension, 0.0);
    sdp.strictness_epsilon = eps;
    sdp.variables = problem.variables;
    sdp.coordinates = layout.refs;
    sdp.recover_offset = w0;
    sdp.recover_basis = basis;
    sdp.free_coordinates = free_cols;

    for (const RawBlock& rb : raw_blocks) {
        StandardSdp::Block b;
        b.id = rb.id;
        b.f0 = rb.f0;
        for (std::size_t j = 0; j < ncoord; ++j)
            if (w0[j] != 0.0) b.f0 += w0[j] * rb.coeffs[j];
        for (std::size_t k = 0; k < sdp.dimension; ++k) {
            Matrix fk(rb.f0.rows(), rb.f0.cols());
            for (std::size_t j = 0; j < ncoord; ++j) {
                const double njk = basis(j, k);
                if (njk != 0.0) fk += njk * rb.coeffs[j];
            }
            b.coeffs.push_back(std::move(fk));
        }
        sdp.blocks.push_back(std::move(b));
    }
    for (const RawRow& rr : raw_rows) {
        StandardSdp::Row r;
        r.id = rr.id;
        r.b = rr.b;
        for (std::size_t j = 0; j < ncoord; ++j) r.b += rr.a[j] * w0[j];
        r.a.assign(sdp.dimension, 0.0);
        for (std::size_t k = 0; k < sdp.dimension; ++k)
            for (std::size_t j = 0; j < ncoord; ++j) r.a[k] += rr.a[j] * basis(j, k);
        sdp.rows.push_back(std::move(r));
    }
    return sdp;
}

Assignment StandardSdp::recover(const std::vector<double>& point) const {
    if (point.size() != dimension)
        fail(ErrorKind::DimensionMismatch, "point dimension does not match the lowered problem");
    std::vector<double> w = recover_offset;
    for (std::size_t j = 0; j < w.size(); ++j)
        for (std::size_t k = 0; k < dimension; ++k) w[j] += recover_basis(j, k) * point[k];

    Assignment a = zero_assignment(variables);
    std::map<std::string, VariableShape> shapes;
    for (const VariableDecl& v : variables) shapes[v.name] = v.shape;
    for (std::size_t j = 0; j < coordinates.size(); ++j) {
        const CoordinateRef& ref = coordinates[j];
        Matrix& m = a[ref.var];
        m(ref.row, ref.col) = w[j];
        if (shapes.at(ref.var) == VariableShape::Symmetric && ref.row != ref.col) m(ref.col, ref.row) = w[j];
    }
    return a;
}

// ============================================================================
// observer synthesis assemblies
// ============================================================================

namespace {

double vertex_scale(const TsDescriptorModel& model) {
    double s = 0.0;
    for (const Matrix& e : model.E) s = std::max(s, e.inf_norm());
    for (const Matrix& a : model.A) s = std::max(s, a.inf_norm());
    for (const Matrix& b : model.B) s = std::max(s, b.inf_norm());
    s = std::max(s, model.C.inf_norm());
    return s;
}

}  // namespace

AffineLmiProblem assemble_theorem1(const TsDescriptorModel& model) {
    check_model(model);
    if (!model.premise_measured)
        fail(ErrorKind::PremiseNotMeasured,
             "these observer conditions blend the gains with plant-state weights; the premise variables must be "
             "measured");

    const std::size_t n = model.n;
    AffineLmiProblem p;
    p.strictness_epsilon = 1e-6 * (1.0 + vertex_scale(model));
    p.variables.push_back(VariableDecl::symmetric("P1", n, true));
    p.variables.push_back(VariableDecl::rectangular("P3", n, n));
    for (std::size_t i = 0; i < model.r; ++i)
        p.variables.push_back(VariableDecl::rectangular("Y3_" + std::to_string(i + 1), n, model.q));

    const Matrix Ct = model.C.transposed();
    for (std::size_t i = 0; i < model.r; ++i) {
        const std::string yi = "Y3_" + std::to_string(i + 1);
        const Matrix At = model.A[i].transposed();
        for (std::size_t k = 0; k < model.l; ++k) {
            const Matrix Et = model.E[k].transposed();
            AffineMatrixExpr e = AffineMatrixExpr::grid({n, n}, {n, n}, true);
            // (1,1) = Ai^T P3 + P3^T Ai - C^T Y_i^T - Y_i C
            e.add_pair(0, 0, terms::LV(At, "P3"));
            e.add_pair(0, 0, terms::VR(yi, model.C, -1.0));
            // (2,1) = P1 - Ek^T P3 + P3^T Ai - Y_i C, (1,2) its transpose
            e.add_pair(1, 0, terms::V("P1"));
            e.add_pair(1, 0, terms::LV(Et, "P3", -1.0));
            e.add_pair(1, 0, terms::VtR("P3", model.A[i]));
            e.add_pair(1, 0, terms::VR(yi, model.C, -1.0));
            // (2,2) = -Ek^T P3 - P3^T Ek
            e.add_pair(1, 1, terms::LV(Et, "P3", -1.0));
            p.constraints.push_back({"vertex(i=" + std::to_string(i + 1) + ",k=" + std::to_string(k + 1) + ")",
                                     std::move(e), Sense::StrictlyNegative});
        }
    }
    return p;
}

AffineLmiProblem assemble_theorem2(const TsDescriptorModel& model, const CentroidDecomposition& centroid,
                                   const LipschitzBounds& bounds, EqualityMode equality_mode) {
    check_model(model);
    for (std::size_t k = 1; k < model.l; ++k)
        if (max_abs_diff(model.E[k], model.E[0]) > 0.0)
            fail(ErrorKind::MultipleLeftVertices,
                 "these observer conditions need a single descriptor matrix; the left vertices differ");
    const Matrix& E = model.E[0];

    const std::size_t n = model.n;
    if (centroid.A0.rows() != n || centroid.A0.cols() != n || centroid.B0.rows() != n ||
        centroid.B0.cols() != model.m_u || centroid.Abar.size() != model.r || centroid.Bbar.size() != model.r)
        fail(ErrorKind::DimensionMismatch, "centroid decomposition does not match the model");
    if (bounds.m.size() != model.r || bounds.n.size() != model.r)
        fail(ErrorKind::DimensionMismatch, "Lipschitz bounds do not cover every rule");
    for (std::size_t i = 0; i < model.r; ++i)
        if (!std::isfinite(bounds.m[i]) || !std::isfinite(bounds.n[i]) || bounds.m[i] < 0.0 || bounds.n[i] < 0.0)
            fail(ErrorKind::NonpositiveBounds, "Lipschitz constants must be finite and nonnegative");
    if (!std::isfinite(bounds.beta1) || bounds.beta1 <= 0.0)
        fail(ErrorKind::NonpositiveBounds, "input bound beta1 must be a positive number");

    AffineLmiProblem p;
    p.strictness_epsilon = 1e-6 * (1.0 + vertex_scale(model));
    p.variables.push_back(VariableDecl::symmetric("P", n, true));
    p.variables.push_back(VariableDecl::symmetric("Q", n, true));
    for (std::size_t i = 0; i < model.r; ++i)
        p.variables.push_back(VariableDecl::rectangular("K_" + std::to_string(i + 1), n, model.q));
    p.variables.push_back(VariableDecl::scalar("lambda1", true));
    p.variables.push_back(VariableDecl::scalar("lambda2", true));
    p.variables.push_back(VariableDecl::scalar("gamma"));

    const Matrix A0t = centroid.A0.transposed();
    const Matrix In = Matrix::identity(n);
    const Matrix Imu = Matrix::identity(model.m_u);
    for (std::size_t i = 0; i < model.r; ++i) {
        const std::string ki = "K_" + std::to_string(i + 1);

        // A0^T P + P A0 - C^T K_i^T - K_i C + Q < 0
        AffineMatrixExpr st = AffineMatrixExpr::single(n, n, true);
        st.add_pair(0, 0, terms::LV(A0t, "P"));
        st.add_pair(0, 0, terms::VR(ki, model.C, -1.0));
        st.add(0, 0, terms::V("Q"));
        p.constraints.push_back({"stability(i=" + std::to_string(i + 1) + ")", std::move(st),
                                 Sense::StrictlyNegative});

        // Deviation block coupling the rule offsets with the Lipschitz data.
        AffineMatrixExpr dv = AffineMatrixExpr::grid({n, n, model.m_u, n}, {n, n, model.m_u, n}, true);
        dv.add(0, 0, terms::V("Q", -1.0));
        dv.add(0, 0, terms::xW("lambda1", In, bounds.m[i] * bounds.m[i]));
        dv.add_pair(0, 1, terms::VR("P", centroid.Abar[i]));
        dv.add_pair(0, 2, terms::VR("P", centroid.Bbar[i]));
        dv.add_pair(0, 3, terms::xW("gamma", In, bounds.n[i]));
        dv.add(1, 1, terms::xW("lambda1", In, -1.0));
        dv.add(2, 2, terms::xW("lambda2", Imu, -1.0));
        dv.add(3, 3, terms::xW("lambda2", In, -1.0));
        p.constraints.push_back({"deviation(i=" + std::to_string(i + 1) + ")", std::move(dv),
                                 Sense::StrictlyNegative});
    }

    // gamma - beta1 * lambda2 >= 0 keeps the input term dominated.
    AffineScalarExpr gain;
    gain.terms.push_back({"gamma", 0, 0, 1.0});
    gain.terms.push_back({"lambda2", 0, 0, -bounds.beta1});
    p.inequalities.push_back({"input_gain", std::move(gain)});

    if (equality_mode == EqualityMode::Descriptor) {
        // E^T P = P E with sym(E^T P) definite makes e^T E^T P e a Lyapunov
        // candidate for the descriptor dynamics.
        const Matrix Et = E.transposed();
        AffineMatrixExpr structural = AffineMatrixExpr::single(n, n, false);
        structural.add(0, 0, terms::LV(Et, "P"));
        structural.add(0, 0, terms::VR("P", E, -1.0));
        p.equalities.push_back({"structure(E^T P - P E)", std::move(structural)});

        AffineMatrixExpr sym_part = AffineMatrixExpr::single(n, n, true);
        sym_part.add(0, 0, terms::LV(Et, "P", 0.5));
        sym_part.add(0, 0, terms::VR("P", E, 0.5));
        p.constraints.push_back({"pos(sym(E^T P))", std::move(sym_part), Sense::StrictlyPositive});
    }
    return p;
}

}  // namespace tsobs
