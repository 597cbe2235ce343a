#include "tsobs/sdp.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "tsobs/errors.hpp"
#include "tsobs/fixtures.hpp"
#include "tsobs/numerics.hpp"

using tsobs::AffineLmiProblem;
using tsobs::AffineMatrixExpr;
using tsobs::CentroidMode;
using tsobs::EqualityMode;
using tsobs::Error;
using tsobs::ErrorKind;
using tsobs::Matrix;
using tsobs::ResidualKind;
using tsobs::Sense;
using tsobs::SolveOptions;
using tsobs::SolveStatus;
using tsobs::StandardSdp;
using tsobs::VariableDecl;
namespace terms = tsobs::terms;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a tsobs::Error");
    return ErrorKind::ParseError;
}

// p > 0 with 2 a p < 0: feasible exactly when a < 0.
AffineLmiProblem lyapunov_problem(double a) {
    AffineLmiProblem p;
    p.variables.push_back(VariableDecl::symmetric("P", 1, true));
    AffineMatrixExpr e = AffineMatrixExpr::single(1, 1, true);
    e.add(0, 0, terms::V("P", 2.0 * a));
    p.constraints.push_back({"lyapunov", std::move(e), Sense::StrictlyNegative});
    return p;
}

StandardSdp one_dim_cone() {  // -x <= 0 as a 1x1 block
    StandardSdp s;
    s.dimension = 1;
    s.objective = {0.0};
    StandardSdp::Block b;
    b.id = "cone";
    b.f0 = Matrix{{0.0}};
    b.coeffs = {Matrix{{-1.0}}};
    s.blocks.push_back(std::move(b));
    return s;
}

StandardSdp capped_interval() {  // -x <= 0 and 10 - x >= 0
    StandardSdp s = one_dim_cone();
    StandardSdp::Row r;
    r.id = "cap";
    r.a = {-1.0};
    r.b = 10.0;
    s.rows.push_back(std::move(r));
    return s;
}

tsobs::LipschitzBounds demo_bounds() {
    tsobs::LipschitzBounds b;
    b.m = {1.700348459944332, 1.7003484599443317};
    b.n = {0.525, 0.525};
    b.beta1 = 0.5;
    b.box = tsobs::Box::cube(3, -2.0, 2.0);
    b.safety = 1.05;
    b.density = 41;
    return b;
}

}  // namespace

TEST_CASE("scalar stability certificate is found and refuted correctly") {
    SUBCASE("stable scalar plant is feasible") {
        auto sdp = tsobs::lower(lyapunov_problem(-1.0));
        auto res = tsobs::solve_feasibility(sdp);
        REQUIRE(res.status == SolveStatus::Feasible);
        CHECK(res.margin > 0.0);
        CHECK(res.phase_objective < -1e-7);
        auto point = sdp.recover(res.point);
        CHECK(point.at("P")(0, 0) > 0.0);
        CHECK(-2.0 * point.at("P")(0, 0) < 0.0);
        CHECK(res.newton_steps == res.objective_trace.size());
    }

    SUBCASE("unstable scalar plant is infeasible") {
        auto res = tsobs::solve_feasibility(tsobs::lower(lyapunov_problem(1.0)));
        CHECK(res.status == SolveStatus::Infeasible);
    }

    SUBCASE("the step budget is honored") {
        SolveOptions opt;
        opt.max_newton_steps = 1;
        auto res = tsobs::solve_feasibility(tsobs::lower(lyapunov_problem(1.0)), opt);
        CHECK(res.status == SolveStatus::IterationLimit);
        CHECK(res.newton_steps <= 1);
    }

    SUBCASE("a margin target pushes the phase objective deeper") {
        SolveOptions opt;
        opt.margin_target = 0.05;
        auto res = tsobs::solve_feasibility(tsobs::lower(lyapunov_problem(-1.0)), opt);
        REQUIRE(res.status == SolveStatus::Feasible);
        CHECK(res.phase_objective < -0.05);
    }
}

TEST_CASE("objective trace is monotone and runs are bitwise reproducible") {
    auto sdp = tsobs::lower(tsobs::assemble_theorem1(tsobs::fixtures::bundled_model("example1")));
    auto r1 = tsobs::solve_feasibility(sdp);
    auto r2 = tsobs::solve_feasibility(sdp);
    CHECK(r1.status == r2.status);
    CHECK(r1.point == r2.point);
    CHECK(r1.objective_trace == r2.objective_trace);
    CHECK(r1.margin == r2.margin);
    for (std::size_t i = 1; i < r1.objective_trace.size(); ++i)
        CHECK(r1.objective_trace[i] <= r1.objective_trace[i - 1]);
}

TEST_CASE("a problem with no blocks or rows is trivially feasible") {
    StandardSdp s;
    s.dimension = 1;
    s.objective = {0.0};
    auto res = tsobs::solve_feasibility(s);
    CHECK(res.status == SolveStatus::Feasible);
    CHECK(res.margin == 1e300);
    CHECK(res.newton_steps == 0);
}

TEST_CASE("random stable and unstable scalar batches are classified") {
    tsupport::DetRng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const double mag = rng.uniform(0.1, 5.0);
        CHECK(tsobs::solve_feasibility(tsobs::lower(lyapunov_problem(-mag))).status == SolveStatus::Feasible);
        CHECK(tsobs::solve_feasibility(tsobs::lower(lyapunov_problem(mag))).status == SolveStatus::Infeasible);
    }
}

TEST_CASE("recentering walks to the analytic center") {
    SUBCASE("interval with known center") {
        auto res = tsobs::recenter(capped_interval(), {1.0});
        CHECK(std::abs(res.point[0] - 5.0) <= 1e-8);
        CHECK(res.margin == doctest::Approx(5.0).epsilon(1e-8));
    }

    SUBCASE("two-sided rows center at zero") {
        StandardSdp s;
        s.dimension = 1;
        s.objective = {0.0};
        s.rows.push_back({"lo", {1.0}, 1.0});
        s.rows.push_back({"hi", {-1.0}, 1.0});
        auto res = tsobs::recenter(s, {0.9});
        CHECK(std::abs(res.point[0]) <= 1e-8);
        CHECK(res.margin == doctest::Approx(1.0).epsilon(1e-8));
    }

    SUBCASE("recentering its own output is a fixed point") {
        auto first = tsobs::recenter(capped_interval(), {1.0});
        auto second = tsobs::recenter(capped_interval(), first.point);
        CHECK(std::abs(second.point[0] - first.point[0]) <= 1e-9);
        CHECK(second.margin >= first.margin - 1e-12);
    }

    SUBCASE("cones without a center stop at the divergence guard") {
        auto res = tsobs::recenter(one_dim_cone(), {1.0});
        CHECK(res.margin >= 1.0);  // never worse than the start
        CHECK(res.newton_steps < 30);
    }

    SUBCASE("infeasible or boundary starts are rejected") {
        CHECK(kind_of([] { tsobs::recenter(one_dim_cone(), {-1.0}); }) == ErrorKind::NotStrictlyFeasible);
        CHECK(kind_of([] { tsobs::recenter(one_dim_cone(), {0.0}); }) == ErrorKind::NotStrictlyFeasible);
    }
}

TEST_CASE("measured-premise conditions for the two-rule demo plant are feasible") {
    auto problem = tsobs::assemble_theorem1(tsobs::fixtures::bundled_model("example1"));
    auto sdp = tsobs::lower(problem);
    auto res = tsobs::solve_feasibility(sdp);
    REQUIRE(res.status == SolveStatus::Feasible);
    CHECK(res.margin > 0.0);

    auto point = sdp.recover(res.point);
    for (const auto& e : tsobs::evaluate(problem, point)) CHECK(e.residual < 0.0);

    auto centered = tsobs::recenter(sdp, res.point);
    CHECK(centered.margin >= res.margin);
}

TEST_CASE("unmeasured-premise descriptor conditions for the three-state plant are feasible") {
    auto model = tsobs::fixtures::bundled_model("example2");
    auto problem = tsobs::assemble_theorem2(model, tsobs::centroid_decompose(model, CentroidMode::Mean),
                                            demo_bounds(), EqualityMode::Descriptor);
    auto sdp = tsobs::lower(problem);
    auto res = tsobs::solve_feasibility(sdp);
    REQUIRE(res.status == SolveStatus::Feasible);
    CHECK(res.margin > 0.0);

    auto point = sdp.recover(res.point);
    for (const auto& e : tsobs::evaluate(problem, point)) {
        if (e.kind == ResidualKind::Equality)
            CHECK(e.residual <= 1e-9);
        else
            CHECK(e.residual < 0.0);
    }
}
