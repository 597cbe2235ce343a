#include "tsobs/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tsobs/errors.hpp"
#include "tsobs/numerics.hpp"

namespace tsobs {

// ================================ Box ================================

Box Box::cube(std::size_t n, double lo, double hi) {
    Box b;
    b.lower.assign(n, lo);
    b.upper.assign(n, hi);
    return b;
}

void check_box(const Box& box, std::size_t n) {
    if (box.lower.size() != n || box.upper.size() != n)
        fail(ErrorKind::DimensionMismatch, "box dimension does not match the state dimension");
    for (std::size_t i = 0; i < n; ++i)
        if (!(box.lower[i] < box.upper[i])) fail(ErrorKind::DimensionMismatch, "box has empty extent on some axis");
}

std::vector<double> lattice_axis(double lo, double hi, std::size_t density) {
    if (density <= 1) return {0.5 * (lo + hi)};
    std::vector<double> v(density);
    for (std::size_t j = 0; j < density; ++j)
        v[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(density - 1);
    return v;
}

// ============================== Model checks ==============================

void check_model(const TsDescriptorModel& m) {
    if (m.n == 0 || m.r == 0 || m.l == 0) fail(ErrorKind::DimensionMismatch, "n, r, and l must all be at least 1");
    if (m.E.size() != m.l) fail(ErrorKind::DimensionMismatch, "E must hold exactly l matrices");
    if (m.A.size() != m.r) fail(ErrorKind::DimensionMismatch, "A must hold exactly r matrices");
    if (m.B.size() != m.r) fail(ErrorKind::DimensionMismatch, "B must hold exactly r matrices");
    for (const Matrix& e : m.E)
        if (e.rows() != m.n || e.cols() != m.n) fail(ErrorKind::DimensionMismatch, "every E_k must be n x n");
    for (const Matrix& a : m.A)
        if (a.rows() != m.n || a.cols() != m.n) fail(ErrorKind::DimensionMismatch, "every A_i must be n x n");
    for (const Matrix& b : m.B)
        if (b.rows() != m.n || b.cols() != m.m_u) fail(ErrorKind::DimensionMismatch, "every B_i must be n x m_u");
    if (m.C.rows() != m.q || m.C.cols() != m.n) fail(ErrorKind::DimensionMismatch, "C must be q x n");
    for (const Matrix& e : m.E)
        if (!e.all_finite()) fail(ErrorKind::NonFinite, "E has non-finite entries");
    for (const Matrix& a : m.A)
        if (!a.all_finite()) fail(ErrorKind::NonFinite, "A has non-finite entries");
    for (const Matrix& b : m.B)
        if (!b.all_finite()) fail(ErrorKind::NonFinite, "B has non-finite entries");
    if (!m.C.all_finite()) fail(ErrorKind::NonFinite, "C has non-finite entries");
    if (m.h.size() != m.r) fail(ErrorKind::DimensionMismatch, "h must hold exactly r membership specs");
    if (m.v.size() != m.l) fail(ErrorKind::DimensionMismatch, "v must hold exactly l membership specs");
    check_membership_list(m.h, m.n, "h");
    check_membership_list(m.v, m.n, "v");
    if (!m.premise_measured && m.l > 1) {
        for (std::size_t k = 1; k < m.l; ++k)
            if (!(m.E[k] == m.E[0]))
                fail(ErrorKind::DimensionMismatch,
                     "unmeasured premises need a single effective E: l must be 1 or all E_k identical");
    }
}

Memberships eval_memberships(const TsDescriptorModel& model, const std::vector<double>& z) {
    if (z.size() != model.n) fail(ErrorKind::DimensionMismatch, "premise vector has wrong length");
    return {evaluate_memberships(model.h, z), evaluate_memberships(model.v, z)};
}

BlendedVertices blend(const TsDescriptorModel& model, const std::vector<double>& h, const std::vector<double>& v) {
    if (h.size() != model.r || v.size() != model.l) fail(ErrorKind::DimensionMismatch, "blend weights have wrong length");
    BlendedVertices out{Matrix(model.n, model.n), Matrix(model.n, model.n), Matrix(model.n, model.m_u)};
    for (std::size_t k = 0; k < model.l; ++k) out.E += v[k] * model.E[k];
    for (std::size_t i = 0; i < model.r; ++i) {
        out.A += h[i] * model.A[i];
        out.B += h[i] * model.B[i];
    }
    return out;
}

// =============================== Validation ===============================

bool ValidationReport::ok() const {
    for (const auto& f : findings)
        if (f.error) return false;
    return true;
}

bool ValidationReport::has_warnings() const {
    for (const auto& f : findings)
        if (!f.error) return true;
    return false;
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    os << "checked " << samples_checked << " lattice samples\n";
    for (const auto& f : findings) os << (f.error ? "error: " : "warning: ") << f.what << "\n";
    if (findings.empty()) os << "no findings\n";
    return os.str();
}

namespace {

std::string point_string(const std::vector<double>& z) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i];
    os << ")";
    return os.str();
}

}  // namespace

ValidationReport validate(const TsDescriptorModel& model, const Box& box, std::size_t samples) {
    check_model(model);
    check_box(box, model.n);
    if (samples == 0) fail(ErrorKind::DimensionMismatch, "samples must be at least 1");

    const std::size_t per_axis =
        static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(samples), 1.0 / static_cast<double>(model.n))));
    std::vector<std::vector<double>> axes(model.n);
    for (std::size_t d = 0; d < model.n; ++d) axes[d] = lattice_axis(box.lower[d], box.upper[d], per_axis);

    ValidationReport report;
    // One finding per condition, tagged with the first offending sample, so
    // the report stays readable on dense lattices.
    bool sum_h_bad = false, sum_v_bad = false, range_h_bad = false, range_v_bad = false, cond_bad = false;

    std::vector<std::size_t> idx(model.n, 0);
    std::vector<double> z(model.n, 0.0);
    const double slack = 1e-9;
    while (true) {
        for (std::size_t d = 0; d < model.n; ++d) z[d] = axes[d][idx[d]];
        report.samples_checked += 1;

        const Memberships w = eval_memberships(model, z);
        double sh = 0.0, sv = 0.0;
        for (double x : w.h) sh += x;
        for (double x : w.v) sv += x;
        if (!sum_h_bad && std::abs(sh - 1.0) > slack) {
            sum_h_bad = true;
            report.findings.push_back({true, "h memberships sum to " + std::to_string(sh) + " at " + point_string(z)});
        }
        if (!sum_v_bad && std::abs(sv - 1.0) > slack) {
            sum_v_bad = true;
            report.findings.push_back({true, "v memberships sum to " + std::to_string(sv) + " at " + point_string(z)});
        }
        if (!range_h_bad)
            for (std::size_t i = 0; i < w.h.size(); ++i)
                if (w.h[i] < -slack || w.h[i] > 1.0 + slack) {
                    range_h_bad = true;
                    report.findings.push_back(
                        {true, "h[" + std::to_string(i) + "] = " + std::to_string(w.h[i]) + " outside [0,1] at " + point_string(z)});
                    break;
                }
        if (!range_v_bad)
            for (std::size_t k = 0; k < w.v.size(); ++k)
                if (w.v[k] < -slack || w.v[k] > 1.0 + slack) {
                    range_v_bad = true;
                    report.findings.push_back({false, "v[" + std::to_string(k) + "] = " + std::to_string(w.v[k]) +
                                                          " outside [0,1] at " + point_string(z) +
                                                          " (blend leaves the vertex hull)"});
                    break;
                }
        if (!cond_bad) {
            const Matrix ez = blend(model, w.h, w.v).E;
            const double cond = condition_estimate(ez);
            if (!(cond <= 1e8)) {
                cond_bad = true;
                report.findings.push_back(
                    {true, "blended E has condition estimate " + std::to_string(cond) + " at " + point_string(z)});
            }
        }

        std::size_t d = 0;
        while (d < model.n && ++idx[d] == axes[d].size()) idx[d++] = 0;
        if (d == model.n) break;
    }
    return report;
}

// ================================ Parsing ================================

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::ParseError, field + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    if (!j[0].is_array()) fail(ErrorKind::ParseError, field + ": expected rows to be arrays");
    const std::size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) fail(ErrorKind::ParseError, field + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) fail(ErrorKind::ParseError, field + ": non-numeric entry");
            m(i, c) = j[i][c].get<double>();
        }
    }
    return m;
}

MembershipSpec membership_from_json(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        fail(ErrorKind::ParseError, field + ": membership spec needs a string \"kind\"");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "tanh_sector") {
        if (!j.contains("state_index") || !j.contains("sign"))
            fail(ErrorKind::ParseError, field + ": tanh_sector needs state_index and sign");
        return MembershipSpec::tanh_sector(j["state_index"].get<std::size_t>(), j["sign"].get<int>(),
                                           j.value("scale", 1.0), j.value("offset", 0.0));
    }
    if (kind == "cos_product") {
        if (!j.contains("state_indices") || !j["state_indices"].is_array())
            fail(ErrorKind::ParseError, field + ": cos_product needs a state_indices array");
        return MembershipSpec::cos_product(j["state_indices"].get<std::vector<std::size_t>>());
    }
    if (kind == "constant") {
        if (!j.contains("value")) fail(ErrorKind::ParseError, field + ": constant needs a value");
        return MembershipSpec::constant(j["value"].get<double>());
    }
    if (kind == "complement") {
        if (!j.contains("of")) fail(ErrorKind::ParseError, field + ": complement needs \"of\"");
        return MembershipSpec::complement(j["of"].get<std::size_t>());
    }
    fail(ErrorKind::ParseError, field + ": unknown membership kind \"" + kind + "\"");
}

std::size_t size_field(const json& j, const char* name) {
    if (!j.contains(name) || !j[name].is_number_unsigned())
        fail(ErrorKind::ParseError, std::string(name) + ": expected a non-negative integer");
    return j[name].get<std::size_t>();
}

}  // namespace

TsDescriptorModel parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::ParseError, std::string("model is not valid structured text: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::ParseError, "model document must be an object");

    TsDescriptorModel m;
    m.n = size_field(j, "n");
    m.m_u = size_field(j, "m_u");
    m.q = size_field(j, "q");
    m.r = size_field(j, "r");
    m.l = size_field(j, "l");
    if (!j.contains("premise_measured") || !j["premise_measured"].is_boolean())
        fail(ErrorKind::ParseError, "premise_measured: expected a boolean");
    m.premise_measured = j["premise_measured"].get<bool>();

    for (const char* name : {"E", "A", "B", "C", "h", "v"})
        if (!j.contains(name)) fail(ErrorKind::ParseError, std::string(name) + ": missing field");
    if (!j["E"].is_array() || !j["A"].is_array() || !j["B"].is_array())
        fail(ErrorKind::ParseError, "E, A, B must be arrays of matrices");
    for (std::size_t k = 0; k < j["E"].size(); ++k) m.E.push_back(matrix_from_json(j["E"][k], "E[" + std::to_string(k) + "]"));
    for (std::size_t i = 0; i < j["A"].size(); ++i) m.A.push_back(matrix_from_json(j["A"][i], "A[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < j["B"].size(); ++i) m.B.push_back(matrix_from_json(j["B"][i], "B[" + std::to_string(i) + "]"));
    m.C = matrix_from_json(j["C"], "C");
    if (!j["h"].is_array() || !j["v"].is_array()) fail(ErrorKind::ParseError, "h and v must be arrays of membership specs");
    for (std::size_t i = 0; i < j["h"].size(); ++i) m.h.push_back(membership_from_json(j["h"][i], "h[" + std::to_string(i) + "]"));
    for (std::size_t k = 0; k < j["v"].size(); ++k) m.v.push_back(membership_from_json(j["v"][k], "v[" + std::to_string(k) + "]"));

    check_model(m);
    return m;
}

TsDescriptorModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::ParseError, "cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

// ============================================================================
// centroid decomposition
// ============================================================================

CentroidDecomposition centroid_decompose(const TsDescriptorModel& model, CentroidMode mode) {
    check_model(model);
    CentroidDecomposition d;
    d.mode = mode;
    d.A0 = Matrix(model.n, model.n);
    d.B0 = Matrix(model.n, model.m_u);
    for (std::size_t i = 0; i < model.r; ++i) {
        d.A0 += model.A[i];
        d.B0 += model.B[i];
    }
    if (mode == CentroidMode::Mean) {
        d.A0 *= 1.0 / static_cast<double>(model.r);
        d.B0 *= 1.0 / static_cast<double>(model.r);
    }
    for (std::size_t i = 0; i < model.r; ++i) {
        d.Abar.push_back(model.A[i] - d.A0);
        d.Bbar.push_back(model.B[i] - d.B0);
    }
    return d;
}

}  // namespace tsobs
