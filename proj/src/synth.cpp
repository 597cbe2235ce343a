#include "tsobs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tsobs/errors.hpp"
#include "tsobs/numerics.hpp"

namespace tsobs {

namespace {

using nlohmann::ordered_json;

std::string short_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

const char* kind_name(ResidualKind k) {
    switch (k) {
        case ResidualKind::Lmi: return "lmi";
        case ResidualKind::Positivity: return "positivity";
        case ResidualKind::Inequality: return "inequality";
        case ResidualKind::Equality: return "equality";
    }
    return "lmi";
}

}  // namespace

bool Theorem2Certificate::has_bounds() const { return bounds.beta1 > 0.0 && !bounds.m.empty(); }

// ============================================================================
// verification
// ============================================================================

namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols)
        fail(ErrorKind::ShapeMismatch, what + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                           ", the model needs " + std::to_string(rows) + "x" + std::to_string(cols));
}

void require_gains(const std::vector<Matrix>& gains, const TsDescriptorModel& model) {
    if (gains.size() != model.r)
        fail(ErrorKind::ShapeMismatch, "certificate carries " + std::to_string(gains.size()) + " gains for " +
                                           std::to_string(model.r) + " rules");
    for (std::size_t i = 0; i < gains.size(); ++i)
        require_shape(gains[i], model.n, model.q, "L[" + std::to_string(i) + "]");
}

// Equalities at recovered points are exact up to arithmetic noise; the
// allowance scales that noise with the certificate magnitudes.
double equality_allowance(const Assignment& point) {
    double scale = 0.0;
    for (const auto& [name, value] : point) scale = std::max(scale, value.max_abs());
    return 1e-9 * (1.0 + scale);
}

VerificationReport build_report(const AffineLmiProblem& problem, const Assignment& point, double tolerance) {
    VerificationReport report;
    report.tolerance = tolerance;
    const double allowance = equality_allowance(point);
    const std::vector<ResidualEntry> entries = evaluate(problem, point);
    report.worst_residual = worst_residual(entries);
    report.passed = true;
    for (const auto& e : entries) {
        bool ok = false;
        switch (e.kind) {
            case ResidualKind::Lmi:
            case ResidualKind::Positivity: ok = e.residual < tolerance; break;
            case ResidualKind::Inequality: ok = e.residual <= tolerance; break;
            case ResidualKind::Equality: ok = e.residual <= std::max(tolerance, allowance); break;
        }
        report.items.push_back({e.id, e.kind, e.residual, ok});
        report.passed = report.passed && ok;
    }
    return report;
}

std::vector<ResidualEntry> to_entries(const VerificationReport& report) {
    std::vector<ResidualEntry> out;
    for (const auto& it : report.items) out.push_back({it.id, it.kind, it.residual});
    return out;
}

}  // namespace

std::string VerificationReport::to_string() const {
    std::size_t width = 4;
    for (const auto& it : items) width = std::max(width, it.id.size());
    std::ostringstream out;
    for (const auto& it : items) {
        char num[40];
        std::snprintf(num, sizeof num, "%+.12e", it.residual);
        out << (it.passed ? "pass  " : "FAIL  ") << it.id << std::string(width - it.id.size() + 2, ' ')
            << kind_name(it.kind) << std::string(11 - std::string(kind_name(it.kind)).size(), ' ') << num << "\n";
    }
    return out.str();
}

VerificationReport verify_certificate(const TsDescriptorModel& model, const Theorem1Certificate& cert,
                                      double tolerance) {
    check_model(model);
    require_shape(cert.P1, model.n, model.n, "P1");
    require_shape(cert.P3, model.n, model.n, "P3");
    require_gains(cert.L, model);

    const AffineLmiProblem problem = assemble_theorem1(model);
    Assignment point;
    point["P1"] = cert.P1;
    point["P3"] = cert.P3;
    const Matrix p3t = cert.P3.transposed();
    for (std::size_t i = 0; i < model.r; ++i) point["Y3_" + std::to_string(i + 1)] = p3t * cert.L[i];
    return build_report(problem, point, tolerance);
}

VerificationReport verify_certificate(const TsDescriptorModel& model, const Theorem2Certificate& cert,
                                      const LipschitzBounds& bounds, double tolerance) {
    check_model(model);
    require_shape(cert.P, model.n, model.n, "P");
    require_shape(cert.Q, model.n, model.n, "Q");
    require_gains(cert.L, model);

    const CentroidDecomposition centroid = centroid_decompose(model, cert.centroid_mode);
    const AffineLmiProblem problem = assemble_theorem2(model, centroid, bounds, cert.equality_mode);
    Assignment point;
    point["P"] = cert.P;
    point["Q"] = cert.Q;
    for (std::size_t i = 0; i < model.r; ++i) point["K_" + std::to_string(i + 1)] = cert.P * cert.L[i];
    point["lambda1"] = Matrix::column({cert.lambda1});
    point["lambda2"] = Matrix::column({cert.lambda2});
    point["gamma"] = Matrix::column({cert.gamma});
    return build_report(problem, point, tolerance);
}

VerificationReport verify_certificate(const TsDescriptorModel& model, const Theorem2Certificate& cert,
                                      double tolerance) {
    if (!cert.has_bounds())
        fail(ErrorKind::MissingBox, "certificate carries no Lipschitz bounds; supply them explicitly");
    return verify_certificate(model, cert, cert.bounds, tolerance);
}

// ============================================================================
// synthesis
// ============================================================================

namespace {

struct SolvedPoint {
    Assignment point;
    std::size_t newton_steps = 0;
};

SolvedPoint solve_problem(const AffineLmiProblem& problem, const SolveOptions& options, const std::string& what) {
    const StandardSdp sdp = lower(problem);
    const SolveResult solved = solve_feasibility(sdp, options);
    if (solved.status == SolveStatus::Infeasible)
        fail(ErrorKind::Infeasible, what + ": the observer conditions are infeasible");
    if (solved.status == SolveStatus::IterationLimit)
        fail(ErrorKind::NumericalFailure, what + ": the solver hit its step limit without a verdict");
    const RecenterResult centered = recenter(sdp, solved.point);
    return {sdp.recover(centered.point), solved.newton_steps + centered.newton_steps};
}

}  // namespace

Theorem1Certificate synthesize_theorem1(const TsDescriptorModel& model, const SolveOptions& options) {
    const AffineLmiProblem problem = assemble_theorem1(model);
    const SolvedPoint s = solve_problem(problem, options, "theorem 1 synthesis");

    Theorem1Certificate cert;
    cert.P1 = s.point.at("P1");
    cert.P3 = s.point.at("P3");
    cert.newton_steps = s.newton_steps;
    const Matrix p3t = cert.P3.transposed();
    for (std::size_t i = 0; i < model.r; ++i) {
        const Matrix& y3 = s.point.at("Y3_" + std::to_string(i + 1));
        cert.Y3.push_back(y3);
        try {
            cert.L.push_back(solve(p3t, y3));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Singular)
                fail(ErrorKind::SingularP3, "P3^T is numerically singular, gains cannot be recovered");
            throw;
        }
        if (max_abs_diff(p3t * cert.L.back(), y3) > 1e-8 * (1.0 + y3.max_abs()))
            fail(ErrorKind::VerificationFailed, "gain recovery round trip lost too much precision");
    }

    const VerificationReport report = verify_certificate(model, cert, 0.0);
    if (!report.passed)
        fail(ErrorKind::VerificationFailed,
             "solved point fails independent re-verification, worst residual " + short_number(report.worst_residual));
    cert.margins = to_entries(report);
    return cert;
}

Theorem2Certificate synthesize_theorem2(const TsDescriptorModel& model, const LipschitzBounds& bounds,
                                        CentroidMode mode, EqualityMode equality_mode, const SolveOptions& options) {
    const CentroidDecomposition centroid = centroid_decompose(model, mode);
    const AffineLmiProblem problem = assemble_theorem2(model, centroid, bounds, equality_mode);
    const SolvedPoint s = solve_problem(problem, options, "theorem 2 synthesis");

    Theorem2Certificate cert;
    cert.P = s.point.at("P");
    cert.Q = s.point.at("Q");
    cert.lambda1 = scalar_value(s.point, "lambda1");
    cert.lambda2 = scalar_value(s.point, "lambda2");
    cert.gamma = scalar_value(s.point, "gamma");
    cert.rho = cert.gamma / cert.lambda2;
    cert.equality_mode = equality_mode;
    cert.centroid_mode = mode;
    cert.bounds = bounds;
    cert.newton_steps = s.newton_steps;
    for (std::size_t i = 0; i < model.r; ++i) {
        const Matrix& k = s.point.at("K_" + std::to_string(i + 1));
        cert.K.push_back(k);
        try {
            cert.L.push_back(solve(cert.P, k));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Singular)
                fail(ErrorKind::SingularP, "P is numerically singular, gains cannot be recovered");
            throw;
        }
        if (max_abs_diff(cert.P * cert.L.back(), k) > 1e-8 * (1.0 + k.max_abs()))
            fail(ErrorKind::VerificationFailed, "gain recovery round trip lost too much precision");
    }

    const VerificationReport report = verify_certificate(model, cert, bounds, 0.0);
    if (!report.passed)
        fail(ErrorKind::VerificationFailed,
             "solved point fails independent re-verification, worst residual " + short_number(report.worst_residual));
    cert.margins = to_entries(report);
    return cert;
}

// ============================================================================
// serialization
// ============================================================================

namespace {

// Values are rounded to 12 significant digits before storage so the shortest
// round-trip printing emits at most 12 digits and re-parsing is exact.
double round12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

ordered_json matrix_to_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(round12(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

ordered_json matrix_list_to_json(const std::vector<Matrix>& list) {
    ordered_json out = ordered_json::array();
    for (const Matrix& m : list) out.push_back(matrix_to_json(m));
    return out;
}

ordered_json vector_to_json(const std::vector<double>& v) {
    ordered_json out = ordered_json::array();
    for (double x : v) out.push_back(round12(x));
    return out;
}

ordered_json margins_to_json(const std::vector<ResidualEntry>& margins) {
    ordered_json out = ordered_json::array();
    for (const auto& e : margins) {
        ordered_json o;
        o["id"] = e.id;
        o["kind"] = kind_name(e.kind);
        o["residual"] = round12(e.residual);
        out.push_back(o);
    }
    return out;
}

const ordered_json& require_field(const ordered_json& j, const char* name) {
    if (!j.contains(name)) fail(ErrorKind::ParseError, std::string(name) + ": missing certificate field");
    return j.at(name);
}

double number_field(const ordered_json& j, const char* name) {
    if (!j.contains(name) || !j[name].is_number())
        fail(ErrorKind::ParseError, std::string(name) + ": expected a number");
    return j[name].get<double>();
}

Matrix matrix_from_json(const ordered_json& j, const std::string& field) {
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

std::vector<Matrix> matrix_list_from_json(const ordered_json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::ParseError, field + ": expected a non-empty array of matrices");
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(matrix_from_json(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<double> vector_from_json(const ordered_json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::ParseError, field + ": expected a non-empty number array");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number()) fail(ErrorKind::ParseError, field + ": non-numeric entry");
        out.push_back(x.get<double>());
    }
    return out;
}

ResidualKind kind_from_name(const std::string& s) {
    if (s == "lmi") return ResidualKind::Lmi;
    if (s == "positivity") return ResidualKind::Positivity;
    if (s == "inequality") return ResidualKind::Inequality;
    if (s == "equality") return ResidualKind::Equality;
    fail(ErrorKind::ParseError, "unknown residual kind \"" + s + "\"");
}

std::vector<ResidualEntry> margins_from_json(const ordered_json& j) {
    if (!j.is_array()) fail(ErrorKind::ParseError, "margins: expected an array");
    std::vector<ResidualEntry> out;
    for (const auto& o : j) {
        if (!o.is_object() || !o.contains("id") || !o["id"].is_string() || !o.contains("kind") ||
            !o["kind"].is_string() || !o.contains("residual") || !o["residual"].is_number())
            fail(ErrorKind::ParseError, "margins: entries need id, kind, residual");
        out.push_back({o["id"].get<std::string>(), kind_from_name(o["kind"].get<std::string>()),
                       o["residual"].get<double>()});
    }
    return out;
}

std::size_t steps_field(const ordered_json& j) {
    if (!j.contains("newton_steps")) return 0;
    if (!j["newton_steps"].is_number_unsigned())
        fail(ErrorKind::ParseError, "newton_steps: expected a non-negative integer");
    return j["newton_steps"].get<std::size_t>();
}

Theorem1Certificate parse_theorem1(const ordered_json& j) {
    Theorem1Certificate c;
    c.P1 = matrix_from_json(require_field(j, "P1"), "P1");
    c.P3 = matrix_from_json(require_field(j, "P3"), "P3");
    c.L = matrix_list_from_json(require_field(j, "L"), "L");
    if (j.contains("Y3")) {
        c.Y3 = matrix_list_from_json(j["Y3"], "Y3");
        if (c.Y3.size() != c.L.size()) fail(ErrorKind::ParseError, "Y3: slack count does not match the gain count");
    } else {
        const Matrix p3t = c.P3.transposed();
        for (const Matrix& l : c.L) c.Y3.push_back(p3t * l);
    }
    if (j.contains("margins")) c.margins = margins_from_json(j["margins"]);
    c.newton_steps = steps_field(j);
    return c;
}

Theorem2Certificate parse_theorem2(const ordered_json& j) {
    Theorem2Certificate c;
    c.P = matrix_from_json(require_field(j, "P"), "P");
    c.Q = matrix_from_json(require_field(j, "Q"), "Q");
    c.L = matrix_list_from_json(require_field(j, "L"), "L");
    c.lambda1 = number_field(j, "lambda1");
    c.lambda2 = number_field(j, "lambda2");
    c.gamma = number_field(j, "gamma");
    if (j.contains("K")) {
        c.K = matrix_list_from_json(j["K"], "K");
        if (c.K.size() != c.L.size()) fail(ErrorKind::ParseError, "K: slack count does not match the gain count");
    } else {
        for (const Matrix& l : c.L) c.K.push_back(c.P * l);
    }
    c.rho = j.contains("rho") ? number_field(j, "rho") : (c.lambda2 != 0.0 ? c.gamma / c.lambda2 : 0.0);

    const std::string eq = j.contains("equality_mode") ? require_field(j, "equality_mode").get<std::string>() : "none";
    if (eq == "descriptor") c.equality_mode = EqualityMode::Descriptor;
    else if (eq == "none") c.equality_mode = EqualityMode::None;
    else fail(ErrorKind::ParseError, "equality_mode: expected \"none\" or \"descriptor\"");

    const std::string cm = j.contains("centroid_mode") ? require_field(j, "centroid_mode").get<std::string>() : "mean";
    if (cm == "mean") c.centroid_mode = CentroidMode::Mean;
    else if (cm == "sum") c.centroid_mode = CentroidMode::Sum;
    else fail(ErrorKind::ParseError, "centroid_mode: expected \"mean\" or \"sum\"");

    if (j.contains("bounds")) {
        const ordered_json& b = j["bounds"];
        if (!b.is_object()) fail(ErrorKind::ParseError, "bounds: expected an object");
        c.bounds.m = vector_from_json(require_field(b, "m"), "bounds.m");
        c.bounds.n = vector_from_json(require_field(b, "n"), "bounds.n");
        c.bounds.beta1 = number_field(b, "beta1");
        const ordered_json& box = require_field(b, "box");
        c.bounds.box.lower = vector_from_json(require_field(box, "lower"), "bounds.box.lower");
        c.bounds.box.upper = vector_from_json(require_field(box, "upper"), "bounds.box.upper");
        const std::string method = b.contains("method") ? require_field(b, "method").get<std::string>() : "analytic";
        if (method == "analytic") c.bounds.method = BoundsMethod::Analytic;
        else if (method == "sampled") c.bounds.method = BoundsMethod::Sampled;
        else fail(ErrorKind::ParseError, "bounds.method: expected \"analytic\" or \"sampled\"");
        if (b.contains("safety")) c.bounds.safety = number_field(b, "safety");
        if (b.contains("density")) {
            if (!b["density"].is_number_unsigned())
                fail(ErrorKind::ParseError, "bounds.density: expected a non-negative integer");
            c.bounds.density = b["density"].get<std::size_t>();
        }
    }
    if (j.contains("margins")) c.margins = margins_from_json(j["margins"]);
    c.newton_steps = steps_field(j);
    return c;
}

}  // namespace

std::string certificate_to_text(const Theorem1Certificate& cert) {
    ordered_json j;
    j["theorem"] = 1;
    j["P1"] = matrix_to_json(cert.P1);
    j["P3"] = matrix_to_json(cert.P3);
    j["Y3"] = matrix_list_to_json(cert.Y3);
    j["L"] = matrix_list_to_json(cert.L);
    j["margins"] = margins_to_json(cert.margins);
    j["newton_steps"] = cert.newton_steps;
    return j.dump(2) + "\n";
}

std::string certificate_to_text(const Theorem2Certificate& cert) {
    ordered_json j;
    j["theorem"] = 2;
    j["P"] = matrix_to_json(cert.P);
    j["Q"] = matrix_to_json(cert.Q);
    j["K"] = matrix_list_to_json(cert.K);
    j["L"] = matrix_list_to_json(cert.L);
    j["lambda1"] = round12(cert.lambda1);
    j["lambda2"] = round12(cert.lambda2);
    j["gamma"] = round12(cert.gamma);
    j["rho"] = round12(cert.rho);
    j["equality_mode"] = cert.equality_mode == EqualityMode::Descriptor ? "descriptor" : "none";
    j["centroid_mode"] = cert.centroid_mode == CentroidMode::Sum ? "sum" : "mean";
    if (cert.has_bounds()) {
        ordered_json b;
        b["m"] = vector_to_json(cert.bounds.m);
        b["n"] = vector_to_json(cert.bounds.n);
        b["beta1"] = round12(cert.bounds.beta1);
        ordered_json box;
        box["lower"] = vector_to_json(cert.bounds.box.lower);
        box["upper"] = vector_to_json(cert.bounds.box.upper);
        b["box"] = box;
        b["method"] = cert.bounds.method == BoundsMethod::Sampled ? "sampled" : "analytic";
        b["safety"] = round12(cert.bounds.safety);
        b["density"] = cert.bounds.density;
        j["bounds"] = b;
    }
    j["margins"] = margins_to_json(cert.margins);
    j["newton_steps"] = cert.newton_steps;
    return j.dump(2) + "\n";
}

Certificate parse_certificate(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        fail(ErrorKind::ParseError, std::string("certificate is not valid structured text: ") + e.what());
    }
    if (!j.is_object() || !j.contains("theorem") || !j["theorem"].is_number_integer())
        fail(ErrorKind::ParseError, "certificate needs an integer \"theorem\" field");
    const long long theorem = j["theorem"].get<long long>();
    if (theorem == 1) return parse_theorem1(j);
    if (theorem == 2) return parse_theorem2(j);
    fail(ErrorKind::ParseError, "unknown theorem " + std::to_string(theorem));
}

Certificate load_certificate(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::ParseError, "cannot open certificate file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_certificate(buf.str());
}

}  // namespace tsobs
