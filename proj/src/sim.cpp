#include "tsobs/sim.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "tsobs/errors.hpp"
#include "tsobs/numerics.hpp"

namespace tsobs {

namespace {

// Thrown by stage evaluators mid-step; the driver turns it into a Termination.
struct AbortSignal {
    StopReason reason;
    double time;
};

std::vector<double> slice(const std::vector<double>& s, std::size_t from, std::size_t len) {
    return std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(from),
                               s.begin() + static_cast<std::ptrdiff_t>(from + len));
}

std::vector<double> vsub(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

void vacc(std::vector<double>& a, const std::vector<double>& b, double w) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += w * b[i];
}

double vmax_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double quad_form(const Matrix& m, const std::vector<double>& e) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) v += e[i] * m(i, j) * e[j];
    return v;
}

void check_initial_states(const SimConfig& cfg, std::size_t n) {
    if (!(cfg.dt > 0.0)) fail(ErrorKind::MalformedProblem, "dt must be positive");
    if (cfg.t_end < cfg.dt) fail(ErrorKind::MalformedProblem, "t_end must cover at least one step");
    if (cfg.record_stride == 0) fail(ErrorKind::MalformedProblem, "record_stride must be at least 1");
    if (cfg.x0.size() != n || cfg.xhat0.size() != n)
        fail(ErrorKind::ShapeMismatch, "initial states must match the model state dimension");
}

void check_gains(const std::vector<Matrix>& gains, std::size_t n, std::size_t q, std::size_t r) {
    if (gains.size() != r) fail(ErrorKind::ShapeMismatch, "certificate needs one gain per rule");
    for (const Matrix& g : gains)
        if (g.rows() != n || g.cols() != q) fail(ErrorKind::ShapeMismatch, "gain shape does not match the model");
}

// Coupled fixed-step integration of the stacked [x; xhat] state with sample
// recording, box containment, and early-stop bookkeeping shared by both
// observers.
Trajectory run_coupled(const SimConfig& cfg, std::size_t n, const StateFn& f, const Matrix* vmat,
                       const Box* box) {
    Trajectory traj;
    std::size_t last_recorded = static_cast<std::size_t>(-1);
    auto record = [&](std::size_t k, double t, const std::vector<double>& s, bool force) {
        if (!force && k % cfg.record_stride != 0) return;
        if (last_recorded == k) return;
        last_recorded = k;
        std::vector<double> x = slice(s, 0, n);
        std::vector<double> xh = slice(s, n, n);
        std::vector<double> e = vsub(x, xh);
        traj.times.push_back(t);
        traj.states.push_back(std::move(x));
        traj.observer.push_back(std::move(xh));
        traj.error_norms.push_back(norm2(e));
        if (vmat) traj.lyapunov.push_back(quad_form(*vmat, e));
        traj.errors.push_back(std::move(e));
    };
    auto outside = [&](const std::vector<double>& s) {
        if (!box) return false;
        for (std::size_t i = 0; i < n; ++i) {
            if (s[i] < box->lower[i] || s[i] > box->upper[i]) return true;
            if (s[n + i] < box->lower[i] || s[n + i] > box->upper[i]) return true;
        }
        return false;
    };

    std::vector<double> s(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = cfg.x0[i];
        s[n + i] = cfg.xhat0[i];
    }
    record(0, 0.0, s, true);
    if (outside(s)) {
        traj.termination = {StopReason::BoxExit, 0.0};
        return traj;
    }

    const auto total = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    for (std::size_t k = 1; k <= total; ++k) {
        const double t_prev = static_cast<double>(k - 1) * cfg.dt;
        try {
            s = rk4_step(f, s, t_prev, cfg.dt);
        } catch (const AbortSignal& sig) {
            record(k - 1, t_prev, s, true);
            traj.termination = {sig.reason, sig.time};
            return traj;
        }
        const double t = static_cast<double>(k) * cfg.dt;
        if (outside(s)) {
            record(k, t, s, true);
            traj.termination = {StopReason::BoxExit, t};
            return traj;
        }
        record(k, t, s, k == total);
    }
    traj.termination = {StopReason::Completed, 0.0};
    return traj;
}

}  // namespace

// ============================================================================
// input signals
// ============================================================================

InputSignal InputSignal::zero() { return InputSignal{}; }

InputSignal InputSignal::constant(std::vector<double> level) {
    InputSignal s;
    s.kind = Kind::Constant;
    s.values = std::move(level);
    return s;
}

InputSignal InputSignal::sine(std::vector<double> amplitude, double frequency, double phase) {
    InputSignal s;
    s.kind = Kind::Sine;
    s.values = std::move(amplitude);
    s.frequency = frequency;
    s.phase = phase;
    return s;
}

InputSignal InputSignal::step_schedule(std::vector<std::pair<double, std::vector<double>>> steps) {
    for (std::size_t i = 1; i < steps.size(); ++i)
        if (!(steps[i].first > steps[i - 1].first))
            fail(ErrorKind::MalformedProblem, "step times must be strictly ascending");
    InputSignal s;
    s.kind = Kind::Steps;
    s.steps = std::move(steps);
    return s;
}

std::vector<double> InputSignal::at(double t, std::size_t m_u) const {
    switch (kind) {
        case Kind::Zero:
            return std::vector<double>(m_u, 0.0);
        case Kind::Constant:
            if (values.size() != m_u) fail(ErrorKind::ShapeMismatch, "constant input has the wrong dimension");
            return values;
        case Kind::Sine: {
            if (values.size() != m_u) fail(ErrorKind::ShapeMismatch, "sine amplitude has the wrong dimension");
            const double s = std::sin(frequency * t + phase);
            std::vector<double> u(m_u);
            for (std::size_t j = 0; j < m_u; ++j) u[j] = values[j] * s;
            return u;
        }
        case Kind::Steps: {
            std::vector<double> u(m_u, 0.0);
            for (const auto& [time, level] : steps) {
                if (time > t) break;
                if (level.size() != m_u) fail(ErrorKind::ShapeMismatch, "step level has the wrong dimension");
                u = level;
            }
            return u;
        }
    }
    fail(ErrorKind::MalformedProblem, "unknown input kind");
}

// ============================================================================
// integrator
// ============================================================================

std::vector<double> rk4_step(const StateFn& derivative, const std::vector<double>& state, double t, double dt) {
    if (!(dt > 0.0)) fail(ErrorKind::MalformedProblem, "dt must be positive");
    const std::size_t n = state.size();
    auto eval = [&](double tt, const std::vector<double>& ss) {
        std::vector<double> k = derivative(tt, ss);
        if (k.size() != n) fail(ErrorKind::ShapeMismatch, "derivative changed the state dimension");
        return k;
    };
    const std::vector<double> k1 = eval(t, state);
    std::vector<double> stage(n);
    for (std::size_t i = 0; i < n; ++i) stage[i] = state[i] + 0.5 * dt * k1[i];
    const std::vector<double> k2 = eval(t + 0.5 * dt, stage);
    for (std::size_t i = 0; i < n; ++i) stage[i] = state[i] + 0.5 * dt * k2[i];
    const std::vector<double> k3 = eval(t + 0.5 * dt, stage);
    for (std::size_t i = 0; i < n; ++i) stage[i] = state[i] + dt * k3[i];
    const std::vector<double> k4 = eval(t + dt, stage);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// ============================================================================
// closed-loop simulation
// ============================================================================

Trajectory simulate_theorem1(const TsDescriptorModel& model, const Theorem1Certificate& certificate,
                             const SimConfig& cfg) {
    check_model(model);
    if (!model.premise_measured)
        fail(ErrorKind::PremiseNotMeasured, "the measured-premise observer needs measured premises");
    const std::size_t n = model.n;
    check_initial_states(cfg, n);
    if (certificate.P1.rows() != n || certificate.P1.cols() != n)
        fail(ErrorKind::ShapeMismatch, "P1 shape does not match the model");
    check_gains(certificate.L, n, model.q, model.r);

    StateFn f = [&](double t, const std::vector<double>& s) {
        const std::vector<double> x = slice(s, 0, n);
        const std::vector<double> xh = slice(s, n, n);
        const Memberships mem = eval_memberships(model, x);
        const BlendedVertices bv = blend(model, mem.h, mem.v);
        if (condition_estimate(bv.E) > 1e10) throw AbortSignal{StopReason::SingularBlend, t};
        const std::vector<double> u = cfg.input.at(t, model.m_u);

        Matrix gain(n, model.q);
        for (std::size_t i = 0; i < model.r; ++i) gain += mem.h[i] * certificate.L[i];
        const std::vector<double> injection = gain * (model.C * vsub(x, xh));

        std::vector<double> rp = bv.A * x;
        vacc(rp, bv.B * u, 1.0);
        std::vector<double> ro = bv.A * xh;
        vacc(ro, bv.B * u, 1.0);
        vacc(ro, injection, 1.0);

        // one factorization serves both sides
        Matrix rhs(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            rhs(i, 0) = rp[i];
            rhs(i, 1) = ro[i];
        }
        const Matrix xdot = solve(bv.E, rhs);
        std::vector<double> ds(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            ds[i] = xdot(i, 0);
            ds[n + i] = xdot(i, 1);
        }
        return ds;
    };
    return run_coupled(cfg, n, f, &certificate.P1, nullptr);
}

Trajectory simulate_theorem2(const TsDescriptorModel& model, const Theorem2Certificate& certificate,
                             const CentroidDecomposition& decomp, const SimConfig& cfg) {
    check_model(model);
    for (std::size_t k = 1; k < model.l; ++k)
        if (max_abs_diff(model.E[k], model.E[0]) > 0.0)
            fail(ErrorKind::MultipleLeftVertices,
                 "this observer runs with a single descriptor matrix; the left vertices differ");
    if (!cfg.box) fail(ErrorKind::MissingBox, "simulation needs the containment box");
    if (!certificate.has_bounds()) fail(ErrorKind::MissingBox, "certificate carries no slope bounds");
    const std::size_t n = model.n;
    check_initial_states(cfg, n);
    check_box(*cfg.box, n);
    if (certificate.P.rows() != n || certificate.P.cols() != n)
        fail(ErrorKind::ShapeMismatch, "P shape does not match the model");
    check_gains(certificate.L, n, model.q, model.r);
    if (decomp.Abar.size() != model.r || decomp.Bbar.size() != model.r || decomp.A0.rows() != n ||
        decomp.A0.cols() != n)
        fail(ErrorKind::ShapeMismatch, "decomposition shape does not match the model");
    if (decomp.mode != certificate.centroid_mode)
        fail(ErrorKind::ShapeMismatch, "certificate and decomposition disagree on the centroid convention");

    const Matrix einv = inverse(model.E[0]);
    const double beta1 = certificate.bounds.beta1;
    Matrix vmat;
    if (certificate.equality_mode == EqualityMode::Descriptor) {
        const Matrix ep = model.E[0].transposed() * certificate.P;
        vmat = 0.5 * (ep + ep.transposed());
    } else {
        vmat = certificate.P;
    }

    StateFn f = [&](double t, const std::vector<double>& s) {
        const std::vector<double> u = cfg.input.at(t, model.m_u);
        if (norm2(u) > beta1) throw AbortSignal{StopReason::InputBoundViolated, t};
        const std::vector<double> x = slice(s, 0, n);
        const std::vector<double> xh = slice(s, n, n);
        const std::vector<double> hx = evaluate_memberships(model.h, x);
        const std::vector<double> hxh = evaluate_memberships(model.h, xh);

        // plant in centroid-plus-deviation form, cross-checked against the
        // direct blend it must equal
        std::vector<double> rp = decomp.A0 * x;
        vacc(rp, decomp.B0 * u, 1.0);
        std::vector<double> direct(n, 0.0);
        for (std::size_t i = 0; i < model.r; ++i) {
            std::vector<double> dev = decomp.Abar[i] * x;
            vacc(dev, decomp.Bbar[i] * u, 1.0);
            vacc(rp, dev, hx[i]);
            std::vector<double> vertex = model.A[i] * x;
            vacc(vertex, model.B[i] * u, 1.0);
            vacc(direct, vertex, hx[i]);
        }
        if (vmax_abs(vsub(rp, direct)) > 1e-10 * (1.0 + vmax_abs(direct)))
            fail(ErrorKind::NumericalFailure, "centroid form diverged from the direct blend");

        const std::vector<double> innovation = model.C * vsub(x, xh);
        std::vector<double> ro = decomp.A0 * xh;
        vacc(ro, decomp.B0 * u, 1.0);
        for (std::size_t i = 0; i < model.r; ++i) {
            std::vector<double> dev = decomp.Abar[i] * xh;
            vacc(dev, decomp.Bbar[i] * u, 1.0);
            vacc(dev, certificate.L[i] * innovation, 1.0);
            vacc(ro, dev, hxh[i]);
        }

        std::vector<double> ds(2 * n);
        const std::vector<double> dp = einv * rp;
        const std::vector<double> dh = einv * ro;
        for (std::size_t i = 0; i < n; ++i) {
            ds[i] = dp[i];
            ds[n + i] = dh[i];
        }
        return ds;
    };
    return run_coupled(cfg, n, f, &vmat, &*cfg.box);
}

// ============================================================================
// export
// ============================================================================

std::string trajectory_to_csv(const Trajectory& trajectory) {
    const std::size_t rows = trajectory.times.size();
    if (rows == 0) fail(ErrorKind::DimensionMismatch, "trajectory has no samples");
    if (trajectory.states.size() != rows || trajectory.observer.size() != rows ||
        trajectory.errors.size() != rows || trajectory.error_norms.size() != rows)
        fail(ErrorKind::DimensionMismatch, "trajectory arrays disagree in length");
    const bool with_v = !trajectory.lyapunov.empty();
    if (with_v && trajectory.lyapunov.size() != rows)
        fail(ErrorKind::DimensionMismatch, "trajectory arrays disagree in length");
    const std::size_t n = trajectory.states[0].size();

    std::string out;
    out.reserve(rows * (n * 3 + 3) * 20);
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
    };
    out += "t";
    for (std::size_t i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) out += ",xhat" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) out += ",e" + std::to_string(i);
    out += ",norm_e";
    if (with_v) out += ",V";
    out += '\n';
    for (std::size_t k = 0; k < rows; ++k) {
        put(trajectory.times[k]);
        for (double v : trajectory.states[k]) {
            out += ',';
            put(v);
        }
        for (double v : trajectory.observer[k]) {
            out += ',';
            put(v);
        }
        for (double v : trajectory.errors[k]) {
            out += ',';
            put(v);
        }
        out += ',';
        put(trajectory.error_norms[k]);
        if (with_v) {
            out += ',';
            put(trajectory.lyapunov[k]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace tsobs
