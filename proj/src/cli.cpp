#include "tsobs/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsobs/errors.hpp"
#include "tsobs/fixtures.hpp"
#include "tsobs/lipschitz.hpp"
#include "tsobs/model.hpp"
#include "tsobs/sim.hpp"
#include "tsobs/synth.hpp"

namespace tsobs::cli {

namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Infeasible:
        case ErrorKind::VerificationFailed:
            return 1;
        case ErrorKind::ParseError:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::ShapeMismatch:
        case ErrorKind::MissingVariable:
        case ErrorKind::MalformedProblem:
        case ErrorKind::PremiseNotMeasured:
        case ErrorKind::MultipleLeftVertices:
        case ErrorKind::NonpositiveBounds:
        case ErrorKind::MissingBox:
        case ErrorKind::UnknownFixture:
        case ErrorKind::Usage:
            return 2;
        default:
            return 3;  // numerical breakdowns: singular factors, iteration limits
    }
}

// Commands never throw; whatever the body managed to report stays in place
// and the error text is appended.
template <typename Body>
CommandOutcome guarded(Body&& body) {
    CommandOutcome out;
    try {
        body(out);
    } catch (const Error& e) {
        out.exit_code = exit_code_for(e.kind());
        out.report += std::string("error: ") + e.what() + "\n";
    }
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ----------------------------------------------------------------------------
// flag mini-grammars
// ----------------------------------------------------------------------------

double parse_number(const std::string& text, const char* what) {
    const char* c = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(c, &end);
    if (end == c || *end != '\0')
        fail(ErrorKind::Usage, std::string("cannot parse ") + what + " from \"" + text + "\"");
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t at = text.find(sep, start);
        out.push_back(text.substr(start, at == std::string::npos ? std::string::npos : at - start));
        if (at == std::string::npos) break;
        start = at + 1;
    }
    return out;
}

std::vector<double> parse_vector(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const std::string& cell : split(text, ',')) out.push_back(parse_number(cell, what));
    return out;
}

std::pair<double, double> parse_range(const std::string& text, const char* what) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        fail(ErrorKind::Usage, std::string(what) + " expects lo:hi, got \"" + text + "\"");
    return {parse_number(text.substr(0, colon), what), parse_number(text.substr(colon + 1), what)};
}

Box parse_box_spec(const std::string& spec, std::size_t n) {
    Box box;
    if (spec.find(',') == std::string::npos) {
        const auto [lo, hi] = parse_range(spec, "--box");
        box = Box::cube(n, lo, hi);
    } else {
        const std::vector<std::string> pieces = split(spec, ',');
        if (pieces.size() != n)
            fail(ErrorKind::Usage,
                 "--box needs one lo:hi pair per state (" + std::to_string(n) + "), got " +
                     std::to_string(pieces.size()));
        for (const std::string& p : pieces) {
            const auto [lo, hi] = parse_range(p, "--box");
            box.lower.push_back(lo);
            box.upper.push_back(hi);
        }
    }
    check_box(box, n);
    return box;
}

InputSignal parse_input_spec(const std::string& spec, std::size_t m_u) {
    if (spec.empty() || spec == "zero") return InputSignal::zero();
    if (spec.rfind("const:", 0) == 0) {
        std::vector<double> level = parse_vector(spec.substr(6), "--input const");
        if (level.size() != m_u)
            fail(ErrorKind::Usage, "--input const needs " + std::to_string(m_u) + " values");
        return InputSignal::constant(std::move(level));
    }
    if (spec.rfind("sine:", 0) == 0) {
        const std::vector<double> parts = parse_vector(spec.substr(5), "--input sine");
        if (parts.size() < 2 || parts.size() > 3)
            fail(ErrorKind::Usage, "--input sine expects amp,freq[,phase]");
        return InputSignal::sine(std::vector<double>(m_u, parts[0]), parts[1],
                                 parts.size() == 3 ? parts[2] : 0.0);
    }
    fail(ErrorKind::Usage, "unknown input \"" + spec + "\" (zero | const:v1,... | sine:amp,freq[,phase])");
}

CentroidMode parse_centroid(const std::string& s) {
    if (s == "mean") return CentroidMode::Mean;
    if (s == "sum") return CentroidMode::Sum;
    fail(ErrorKind::Usage, "--centroid must be mean or sum, got \"" + s + "\"");
}

EqualityMode parse_equality(const std::string& s) {
    if (s == "descriptor") return EqualityMode::Descriptor;
    if (s == "none") return EqualityMode::None;
    fail(ErrorKind::Usage, "--equality-mode must be descriptor or none, got \"" + s + "\"");
}

// ----------------------------------------------------------------------------
// report building blocks
// ----------------------------------------------------------------------------

std::string model_summary(const TsDescriptorModel& m) {
    return std::to_string(m.n) + " states, " + std::to_string(m.m_u) + " inputs, " + std::to_string(m.q) +
           " outputs, " + std::to_string(m.r) + " rules, " + std::to_string(m.l) + " left vertices, premises " +
           (m.premise_measured ? "measured" : "unmeasured");
}

std::string box_summary(const Box& box) {
    std::string out;
    for (std::size_t i = 0; i < box.lower.size(); ++i) {
        if (i) out += " x ";
        out += "[" + num(box.lower[i]) + ", " + num(box.upper[i]) + "]";
    }
    return out;
}

std::string format_margins(const std::vector<ResidualEntry>& margins) {
    std::string out = "margins:\n";
    for (const auto& e : margins) out += "  " + e.id + "  " + num(e.residual) + "\n";
    return out;
}

std::string format_matrix(const std::string& label, const Matrix& m) {
    std::string out = label + ":\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += "  [";
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ", ";
            out += num(m(i, j));
        }
        out += "]\n";
    }
    return out;
}

const char* stop_name(StopReason reason) {
    switch (reason) {
        case StopReason::Completed: return "completed";
        case StopReason::SingularBlend: return "singular-blend";
        case StopReason::BoxExit: return "box-exit";
        case StopReason::InputBoundViolated: return "input-bound-violated";
    }
    return "unknown";
}

void write_file(const std::string& path, const std::string& content, CommandOutcome& out) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Usage, "cannot open \"" + path + "\" for writing");
    f << content;
    f.flush();
    if (!f) fail(ErrorKind::Usage, "failed while writing \"" + path + "\"");
    out.artifacts.push_back(path);
}

std::string trajectory_summary(const Trajectory& traj) {
    std::string out;
    out += "samples recorded: " + std::to_string(traj.times.size()) + "\n";
    out += std::string("termination: ") + stop_name(traj.termination.reason);
    if (traj.termination.reason != StopReason::Completed)
        out += " at t = " + num(traj.termination.time);
    out += "\n";
    out += "final |e| = " + num(traj.error_norms.back()) + " at t = " + num(traj.times.back()) + "\n";
    if (!traj.lyapunov.empty()) out += "final V = " + num(traj.lyapunov.back()) + "\n";
    return out;
}

}  // namespace

// ============================================================================
// commands
// ============================================================================

CommandOutcome cmd_validate(const ValidateArgs& args) {
    return guarded([&](CommandOutcome& out) {
        const TsDescriptorModel model = load_model(args.model_path);
        const Box box = args.box.empty() ? Box::cube(model.n, -2.0, 2.0) : parse_box_spec(args.box, model.n);
        const ValidationReport report = validate(model, box, args.samples);
        out.report += "model " + args.model_path + ": " + model_summary(model) + "\n";
        out.report += "box " + box_summary(box) + "\n";
        out.report += report.to_string();
        if (report.ok()) {
            out.report += report.has_warnings() ? "validation: pass with warnings\n" : "validation: pass\n";
        } else {
            out.report += "validation: fail\n";
            out.exit_code = 1;
        }
    });
}

CommandOutcome cmd_synthesize(const SynthesizeArgs& args) {
    return guarded([&](CommandOutcome& out) {
        const TsDescriptorModel model = load_model(args.model_path);
        SolveOptions opts;
        opts.tolerance = args.tol;
        std::string cert_text;
        if (args.theorem == 1) {
            const Theorem1Certificate cert = synthesize_theorem1(model, opts);
            out.report += "theorem 1 synthesis: feasible (" + std::to_string(cert.newton_steps) + " newton steps)\n";
            out.report += format_margins(cert.margins);
            for (std::size_t i = 0; i < cert.L.size(); ++i)
                out.report += format_matrix("L" + std::to_string(i + 1), cert.L[i]);
            cert_text = certificate_to_text(cert);
        } else if (args.theorem == 2) {
            if (args.box.empty()) fail(ErrorKind::Usage, "theorem 2 needs --box to certify slope bounds on");
            if (!(args.beta1 > 0.0)) fail(ErrorKind::Usage, "theorem 2 needs --beta1 > 0");
            const Box box = parse_box_spec(args.box, model.n);
            EstimateOptions eopts;
            eopts.density = args.density;
            eopts.safety = args.safety;
            LipschitzBounds bounds = estimate_constants(model, box, eopts);
            bounds.beta1 = args.beta1;
            out.report += "slope bounds on " + box_summary(box) + ":\n";
            for (std::size_t i = 0; i < bounds.m.size(); ++i)
                out.report +=
                    "  rule " + std::to_string(i + 1) + ": m = " + num(bounds.m[i]) + ", n = " + num(bounds.n[i]) + "\n";
            const Theorem2Certificate cert =
                synthesize_theorem2(model, bounds, parse_centroid(args.centroid), parse_equality(args.equality_mode), opts);
            out.report += "theorem 2 synthesis: feasible (" + std::to_string(cert.newton_steps) + " newton steps)\n";
            out.report += "lambda1 = " + num(cert.lambda1) + ", lambda2 = " + num(cert.lambda2) +
                          ", gamma = " + num(cert.gamma) + "\n";
            out.report += "input attenuation rho = " + num(cert.rho) + "\n";
            out.report += format_margins(cert.margins);
            for (std::size_t i = 0; i < cert.L.size(); ++i)
                out.report += format_matrix("L" + std::to_string(i + 1), cert.L[i]);
            cert_text = certificate_to_text(cert);
        } else {
            fail(ErrorKind::Usage, "--theorem must be 1 or 2");
        }
        if (!args.out.empty()) {
            write_file(args.out, cert_text, out);
            out.report += "certificate written to " + args.out + "\n";
        }
    });
}

CommandOutcome cmd_verify(const VerifyArgs& args) {
    return guarded([&](CommandOutcome& out) {
        const TsDescriptorModel model = load_model(args.model_path);
        const Certificate cert = load_certificate(args.certificate_path);
        const VerificationReport report =
            std::holds_alternative<Theorem1Certificate>(cert)
                ? verify_certificate(model, std::get<Theorem1Certificate>(cert), args.tol)
                : verify_certificate(model, std::get<Theorem2Certificate>(cert), args.tol);
        out.report += report.to_string();
        out.report += std::string("verdict: ") + (report.passed ? "pass" : "fail") + " (worst residual " +
                      num(report.worst_residual) + " at tolerance " + num(report.tolerance) + ")\n";
        if (!report.passed) out.exit_code = 1;
    });
}

CommandOutcome cmd_simulate(const SimulateArgs& args) {
    return guarded([&](CommandOutcome& out) {
        const TsDescriptorModel model = load_model(args.model_path);
        const Certificate cert = load_certificate(args.certificate_path);
        SimConfig cfg;
        cfg.dt = args.dt;
        cfg.t_end = args.t_end;
        cfg.record_stride = args.stride;
        cfg.x0 = args.x0.empty() ? std::vector<double>(model.n, 0.0) : parse_vector(args.x0, "--x0");
        cfg.xhat0 = args.xhat0.empty() ? std::vector<double>(model.n, 0.0) : parse_vector(args.xhat0, "--xhat0");
        cfg.input = parse_input_spec(args.input, model.m_u);

        Trajectory traj;
        if (std::holds_alternative<Theorem1Certificate>(cert)) {
            traj = simulate_theorem1(model, std::get<Theorem1Certificate>(cert), cfg);
        } else {
            const Theorem2Certificate& c2 = std::get<Theorem2Certificate>(cert);
            if (!args.box.empty())
                cfg.box = parse_box_spec(args.box, model.n);
            else if (c2.has_bounds())
                cfg.box = c2.bounds.box;
            traj = simulate_theorem2(model, c2, centroid_decompose(model, c2.centroid_mode), cfg);
        }
        out.report += trajectory_summary(traj);
        if (!args.out.empty()) {
            write_file(args.out, trajectory_to_csv(traj), out);
            out.report += "trajectory written to " + args.out + "\n";
        }
        if (traj.termination.reason != StopReason::Completed) out.exit_code = 1;
    });
}

CommandOutcome cmd_bounds(const BoundsArgs& args) {
    return guarded([&](CommandOutcome& out) {
        const TsDescriptorModel model = load_model(args.model_path);
        const Box box = args.box.empty() ? Box::cube(model.n, -2.0, 2.0) : parse_box_spec(args.box, model.n);
        EstimateOptions eopts;
        eopts.density = args.density;
        eopts.safety = args.safety;
        const LipschitzBounds bounds = estimate_constants(model, box, eopts);
        out.report += "slope bounds on " + box_summary(box) + " (density " + std::to_string(args.density) +
                      ", safety " + num(args.safety) + "):\n";
        for (std::size_t i = 0; i < bounds.m.size(); ++i)
            out.report +=
                "  rule " + std::to_string(i + 1) + ": m = " + num(bounds.m[i]) + ", n = " + num(bounds.n[i]) + "\n";
        if (args.pairs > 0) {
            const HypothesisCheck hc = check_hypothesis(model, bounds, args.pairs);
            double worst_m = 0.0, worst_n = 0.0;
            for (double v : hc.worst_ratio_m) worst_m = std::max(worst_m, v);
            for (double v : hc.worst_ratio_n) worst_n = std::max(worst_n, v);
            out.report += "hypothesis check over " + std::to_string(hc.pairs) + " pairs: worst m-ratio " +
                          num(worst_m) + ", worst n-ratio " + num(worst_n) + (hc.ok ? " (ok)\n" : " (VIOLATED)\n");
            if (!hc.ok) out.exit_code = 1;
        }
    });
}

CommandOutcome cmd_demo(const DemoArgs& args) {
    return guarded([&](CommandOutcome& out) {
        if (args.name != "example1" && args.name != "example2")
            fail(ErrorKind::UnknownFixture, "no demo named \"" + args.name + "\" (try example1 or example2)");
        const TsDescriptorModel model = fixtures::bundled_model(args.name);
        out.report += "model " + args.name + ": " + model_summary(model) + "\n";

        bool all_pass = true;
        std::string cert_text;
        Trajectory traj;

        if (args.name == "example1") {
            const Theorem1Certificate cert = synthesize_theorem1(model);
            out.report += "synthesis: feasible (" + std::to_string(cert.newton_steps) + " newton steps)\n";
            out.report += format_margins(cert.margins);
            const VerificationReport rep = verify_certificate(model, cert);
            out.report += std::string("verification: ") + (rep.passed ? "pass" : "fail") + " (worst residual " +
                          num(rep.worst_residual) + ")\n";
            all_pass = all_pass && rep.passed;

            SimConfig cfg;
            cfg.x0 = {1.0, 1.0};
            cfg.xhat0 = {0.0, 0.0};
            cfg.t_end = 20.0;
            traj = simulate_theorem1(model, cert, cfg);
            const bool sim_ok =
                traj.termination.reason == StopReason::Completed && traj.error_norms.back() <= 1e-3;
            out.report += trajectory_summary(traj);
            out.report += std::string("simulation target |e(20)| <= 0.001: ") + (sim_ok ? "pass" : "fail") + "\n";
            all_pass = all_pass && sim_ok;
            cert_text = certificate_to_text(cert);
        } else {
            EstimateOptions eopts;  // density 41, safety 1.05
            LipschitzBounds bounds = estimate_constants(model, Box::cube(model.n, -2.0, 2.0), eopts);
            bounds.beta1 = 0.5;
            Theorem2Certificate cert;
            std::string mode_note = "descriptor";
            try {
                cert = synthesize_theorem2(model, bounds, CentroidMode::Mean, EqualityMode::Descriptor);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Infeasible) throw;
                cert = synthesize_theorem2(model, bounds, CentroidMode::Mean, EqualityMode::None);
                mode_note = "none (descriptor equality infeasible)";
            }
            out.report += "synthesis: feasible with equality mode " + mode_note + " (" +
                          std::to_string(cert.newton_steps) + " newton steps)\n";
            out.report += "lambda1 = " + num(cert.lambda1) + ", lambda2 = " + num(cert.lambda2) +
                          ", gamma = " + num(cert.gamma) + ", rho = " + num(cert.rho) + "\n";
            out.report += format_margins(cert.margins);
            const VerificationReport rep = verify_certificate(model, cert);
            out.report += std::string("verification: ") + (rep.passed ? "pass" : "fail") + " (worst residual " +
                          num(rep.worst_residual) + ")\n";
            all_pass = all_pass && rep.passed;

            SimConfig cfg;
            cfg.x0 = {1.0, 1.0, 1.0};
            cfg.xhat0 = {0.0, 0.0, 0.0};
            cfg.input = InputSignal::sine({0.5}, 1.0, 0.0);
            cfg.box = Box::cube(model.n, -3.0, 3.0);
            cfg.t_end = 30.0;
            traj = simulate_theorem2(model, cert, centroid_decompose(model, cert.centroid_mode), cfg);
            const bool sim_ok =
                traj.termination.reason == StopReason::Completed && traj.error_norms.back() <= 1e-2;
            out.report += trajectory_summary(traj);
            out.report += std::string("simulation target |e(30)| <= 0.01 without box exit: ") +
                          (sim_ok ? "pass" : "fail") + "\n";
            all_pass = all_pass && sim_ok;
            cert_text = certificate_to_text(cert);
        }

        const std::string base = args.out_dir + "/" + args.name;
        write_file(base + ".cert", cert_text, out);
        write_file(base + ".csv", trajectory_to_csv(traj), out);
        out.report += std::string("demo: ") + (all_pass ? "pass" : "fail") + "\n";
        write_file(base + ".summary.txt", out.report, out);
        if (!all_pass) out.exit_code = 1;
    });
}

}  // namespace tsobs::cli
