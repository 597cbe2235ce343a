#include "tsobs/lmi.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "tsobs/errors.hpp"
#include "tsobs/fixtures.hpp"
#include "tsobs/numerics.hpp"

using tsobs::AffineLmiProblem;
using tsobs::AffineMatrixExpr;
using tsobs::AffineScalarExpr;
using tsobs::Assignment;
using tsobs::CentroidMode;
using tsobs::EqualityMode;
using tsobs::Error;
using tsobs::ErrorKind;
using tsobs::LipschitzBounds;
using tsobs::Matrix;
using tsobs::ResidualKind;
using tsobs::Sense;
using tsobs::TsDescriptorModel;
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

using tsupport::example2_bounds;
using tsupport::scalar_plant;

std::map<std::string, double> residuals_by_id(const AffineLmiProblem& problem, const Assignment& point) {
    std::map<std::string, double> out;
    for (const auto& e : tsobs::evaluate(problem, point)) out[e.id] = e.residual;
    return out;
}

}  // namespace

TEST_CASE("variable declarations expose their free entry counts") {
    CHECK(VariableDecl::symmetric("P", 3).entry_count() == 6);
    CHECK(VariableDecl::rectangular("Y", 2, 3).entry_count() == 6);
    CHECK(VariableDecl::scalar("g").entry_count() == 1);

    auto problem = tsobs::assemble_theorem1(tsobs::fixtures::bundled_model("example1"));
    CHECK(problem.coordinate_count() == 11);  // 3 + 4 + 2 + 2
}

TEST_CASE("term evaluation matches hand computation") {
    const Matrix L{{1.0, 2.0, 0.0}, {0.0, 1.0, -1.0}};          // 2x3
    const Matrix X{{1.0, 0.5}, {0.0, 2.0}, {3.0, -1.0}};        // 3x2
    const Matrix R{{1.0, 0.0, 0.0, 1.0}, {0.0, -1.0, 2.0, 0.0}};  // 2x4
    Assignment point{{"X", X}};

    SUBCASE("full product with coefficient") {
        AffineMatrixExpr e = AffineMatrixExpr::single(2, 4, false);
        e.add(0, 0, terms::LVR(L, "X", R, 2.0));
        CHECK(tsobs::evaluate_expr(e, point) == 2.0 * (L * X * R));
    }

    SUBCASE("transposing a term transposes its value") {
        AffineMatrixExpr e = AffineMatrixExpr::single(2, 4, false);
        e.add(0, 0, terms::LVR(L, "X", R, 2.0));
        AffineMatrixExpr et = AffineMatrixExpr::single(4, 2, false);
        et.add(0, 0, tsobs::transposed_term(terms::LVR(L, "X", R, 2.0)));
        CHECK(tsobs::evaluate_expr(et, point) == tsobs::evaluate_expr(e, point).transposed());
    }

    SUBCASE("scalar weighted and constant terms") {
        Assignment p2{{"s", Matrix{{3.0}}}};
        AffineMatrixExpr e = AffineMatrixExpr::single(2, 2, false);
        e.add(0, 0, terms::xW("s", Matrix::identity(2), -2.0));
        e.add(0, 0, terms::c(Matrix{{1.0, 0.0}, {0.0, 1.0}}, 5.0));
        CHECK(tsobs::evaluate_expr(e, p2) == Matrix{{-1.0, 0.0}, {0.0, -1.0}});
    }

    SUBCASE("missing variables and misfitting shapes are rejected") {
        AffineMatrixExpr e = AffineMatrixExpr::single(2, 4, false);
        e.add(0, 0, terms::LVR(L, "X", R));
        CHECK(kind_of([&] { tsobs::evaluate_expr(e, Assignment{}); }) == ErrorKind::MissingVariable);

        AffineMatrixExpr bad = AffineMatrixExpr::single(3, 3, false);
        bad.add(0, 0, terms::LVR(L, "X", R));
        CHECK(kind_of([&] { tsobs::evaluate_expr(bad, point); }) == ErrorKind::ShapeMismatch);
    }

    SUBCASE("symmetric grids must be square") {
        CHECK(kind_of([] { AffineMatrixExpr::grid({2, 1}, {2}, true); }) == ErrorKind::MalformedProblem);
    }
}

TEST_CASE("scalar plant gives the known 2x2 witness block") {
    auto problem = tsobs::assemble_theorem1(scalar_plant());
    REQUIRE(problem.constraints.size() == 1);

    Assignment point{{"P1", Matrix{{1.0}}}, {"P3", Matrix{{1.0}}}, {"Y3_1", Matrix{{0.0}}}};
    CHECK(tsobs::evaluate_expr(problem.constraints[0].expr, point) == Matrix{{-2.0, -1.0}, {-1.0, -2.0}});

    auto entries = tsobs::evaluate(problem, point);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].id == "vertex(i=1,k=1)");
    CHECK(entries[0].kind == ResidualKind::Lmi);
    CHECK(entries[0].residual == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(entries[1].id == "pos(P1)");
    CHECK(entries[1].kind == ResidualKind::Positivity);
    CHECK(entries[1].residual == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(tsobs::worst_residual(entries) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("measured-premise assembly over the two-rule demo plant") {
    auto model = tsobs::fixtures::bundled_model("example1");
    auto problem = tsobs::assemble_theorem1(model);

    SUBCASE("one block per vertex pair plus the definiteness flag") {
        REQUIRE(problem.constraints.size() == 4);
        CHECK(problem.constraints[0].id == "vertex(i=1,k=1)");
        CHECK(problem.constraints[1].id == "vertex(i=1,k=2)");
        CHECK(problem.constraints[2].id == "vertex(i=2,k=1)");
        CHECK(problem.constraints[3].id == "vertex(i=2,k=2)");
        for (const auto& c : problem.constraints) {
            CHECK(c.expr.rows() == 4);
            CHECK(c.sense == Sense::StrictlyNegative);
        }
        CHECK(problem.variable("P1").positive);
        CHECK_FALSE(problem.variable("P3").positive);
        CHECK(problem.strictness_epsilon == doctest::Approx(5e-6).epsilon(1e-12));
    }

    SUBCASE("lowering materializes the flag as a fifth block") {
        auto sdp = tsobs::lower(problem);
        CHECK(sdp.dimension == 11);
        REQUIRE(sdp.blocks.size() == 5);
        for (std::size_t i = 0; i < 4; ++i) CHECK(sdp.blocks[i].f0.rows() == 4);
        CHECK(sdp.blocks[4].id == "pos(P1)");
        CHECK(sdp.blocks[4].f0.rows() == 2);
        CHECK(sdp.rows.empty());
        CHECK(sdp.free_coordinates.size() == 11);
        for (double w : sdp.recover_offset) CHECK(w == 0.0);
    }

    SUBCASE("unmeasured premises are rejected") {
        CHECK(kind_of([] { tsobs::assemble_theorem1(tsobs::fixtures::bundled_model("example2")); }) ==
              ErrorKind::PremiseNotMeasured);
    }

    SUBCASE("assignments are validated") {
        Assignment point = tsobs::lower(problem).recover(std::vector<double>(11, 0.1));
        Assignment missing = point;
        missing.erase("Y3_2");
        CHECK(kind_of([&] { tsobs::evaluate(problem, missing); }) == ErrorKind::MissingVariable);

        Assignment wrong = point;
        wrong["P1"] = Matrix::identity(3);
        CHECK(kind_of([&] { tsobs::evaluate(problem, wrong); }) == ErrorKind::ShapeMismatch);

        Assignment asym = point;
        asym["P1"] = Matrix{{1.0, 0.5}, {-0.5, 1.0}};
        CHECK(kind_of([&] { tsobs::evaluate(problem, asym); }) == ErrorKind::ShapeMismatch);
    }
}

TEST_CASE("residuals at the bundled reference certificate point") {
    // The bundled reference gains land outside the feasible cone on two of
    // the four vertex blocks. These residuals are frozen from an independent
    // evaluation of the same expressions.
    auto model = tsobs::fixtures::bundled_model("example1");
    auto problem = tsobs::assemble_theorem1(model);

    const Matrix P1{{0.9875, -0.0266}, {-0.0266, 1.2489}};
    const Matrix P3{{0.2561, -0.0373}, {0.0394, 0.3161}};
    const Matrix L1{{-0.4898}, {0.4323}};
    const Matrix L2{{0.5255}, {-0.1566}};
    Assignment point{{"P1", P1},
                     {"P3", P3},
                     {"Y3_1", P3.transposed() * L1},
                     {"Y3_2", P3.transposed() * L2}};

    auto entries = tsobs::evaluate(problem, point);
    REQUIRE(entries.size() == 5);
    CHECK(std::abs(entries[0].residual - -1.720609784348e-01) <= 1e-9);
    CHECK(std::abs(entries[1].residual - -1.725384077684e-01) <= 1e-9);
    CHECK(std::abs(entries[2].residual - 6.056620198843e-01) <= 1e-9);
    CHECK(std::abs(entries[3].residual - 6.027747789778e-01) <= 1e-9);
    CHECK(entries[4].id == "pos(P1)");
    CHECK(std::abs(entries[4].residual - -0.9848206537727825) <= 1e-12);
}

TEST_CASE("definiteness flags lower to closed blocks with margin") {
    AffineLmiProblem p;
    p.variables.push_back(VariableDecl::symmetric("P", 2, true));
    AffineMatrixExpr neg = AffineMatrixExpr::single(2, 2, true);
    neg.add(0, 0, terms::V("P", -1.0));
    p.constraints.push_back({"neg(P)", std::move(neg), Sense::StrictlyNegative});

    auto sdp = tsobs::lower(p);
    CHECK(sdp.dimension == 3);
    REQUIRE(sdp.blocks.size() == 2);
    CHECK(sdp.strictness_epsilon == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(sdp.blocks[0].f0 == sdp.strictness_epsilon * Matrix::identity(2));
    CHECK(sdp.blocks[1].f0 == sdp.strictness_epsilon * Matrix::identity(2));
    // Both blocks carry -P: the first from the constraint, the second from the flag.
    CHECK(sdp.blocks[0].coeffs[0] == Matrix{{-1.0, 0.0}, {0.0, 0.0}});
    CHECK(sdp.blocks[1].coeffs[0] == Matrix{{-1.0, 0.0}, {0.0, 0.0}});
    CHECK(sdp.blocks[0].coeffs[1] == Matrix{{0.0, -1.0}, {-1.0, 0.0}});  // paired off-diagonal basis
}

TEST_CASE("equalities are eliminated with a recoverable bijection") {
    AffineLmiProblem p;
    p.variables.push_back(VariableDecl::symmetric("P", 2, true));
    AffineMatrixExpr neg = AffineMatrixExpr::single(2, 2, true);
    neg.add(0, 0, terms::V("P", -1.0));
    p.constraints.push_back({"neg(P)", std::move(neg), Sense::StrictlyNegative});

    AffineMatrixExpr sel = AffineMatrixExpr::single(1, 1, false);
    sel.add(0, 0, terms::LVR(Matrix{{1.0, 0.0}}, "P", Matrix{{0.0}, {1.0}}));
    p.equalities.push_back({"select(P(1,2))", sel});

    SUBCASE("the selected entry is pinned to zero") {
        auto sdp = tsobs::lower(p);
        CHECK(sdp.dimension == 2);
        REQUIRE(sdp.free_coordinates == std::vector<std::size_t>{0, 2});
        Assignment a = sdp.recover({3.0, 7.0});
        CHECK(a.at("P") == Matrix{{3.0, 0.0}, {0.0, 7.0}});
        auto entries = tsobs::evaluate(p, a);
        CHECK(entries.back().kind == ResidualKind::Equality);
        CHECK(entries.back().residual == 0.0);
    }

    SUBCASE("contradictory pins are detected") {
        AffineMatrixExpr sel2 = AffineMatrixExpr::single(1, 1, false);
        sel2.add(0, 0, terms::LVR(Matrix{{1.0, 0.0}}, "P", Matrix{{0.0}, {1.0}}));
        sel2.add(0, 0, terms::c(Matrix{{-1.0}}));  // P(1,2) - 1 == 0
        p.equalities.push_back({"select(P(1,2)) shifted", sel2});
        CHECK(kind_of([&] { tsobs::lower(p); }) == ErrorKind::InconsistentEqualities);
    }

    SUBCASE("problems need at least one variable and one free coordinate") {
        CHECK(kind_of([] { tsobs::lower(AffineLmiProblem{}); }) == ErrorKind::MalformedProblem);
    }
}

TEST_CASE("centroid decomposition of the three-state descriptor plant") {
    auto model = tsobs::fixtures::bundled_model("example2");

    SUBCASE("mean mode averages the vertices") {
        auto c = tsobs::centroid_decompose(model, CentroidMode::Mean);
        CHECK(c.A0 == Matrix{{-2.5, 1.5, -0.5}, {3.0, -3.0, 0.0}, {1.25, 0.75, -5.0}});
        CHECK(c.B0 == Matrix{{0.75}, {0.75}, {0.5}});
        CHECK(c.Abar[0] == model.A[0] - c.A0);
        CHECK(tsobs::max_abs_diff(c.Abar[0] + c.Abar[1], Matrix(3, 3)) == 0.0);
        CHECK(tsobs::max_abs_diff(c.Bbar[0] + c.Bbar[1], Matrix(3, 1)) == 0.0);
    }

    SUBCASE("sum mode keeps the plain sum as the center") {
        auto c = tsobs::centroid_decompose(model, CentroidMode::Sum);
        CHECK(c.A0 == model.A[0] + model.A[1]);
        CHECK(c.Abar[0] == -1.0 * model.A[1]);
        CHECK(c.Abar[1] == -1.0 * model.A[0]);
    }
}

TEST_CASE("unmeasured-premise assembly over the three-state descriptor plant") {
    auto model = tsobs::fixtures::bundled_model("example2");
    auto centroid = tsobs::centroid_decompose(model, CentroidMode::Mean);
    auto bounds = example2_bounds();

    SUBCASE("stability and deviation blocks plus the attenuation row") {
        auto problem = tsobs::assemble_theorem2(model, centroid, bounds, EqualityMode::None);
        REQUIRE(problem.constraints.size() == 4);
        CHECK(problem.constraints[0].id == "stability(i=1)");
        CHECK(problem.constraints[0].expr.rows() == 3);
        CHECK(problem.constraints[1].id == "deviation(i=1)");
        CHECK(problem.constraints[1].expr.rows() == 10);  // n + n + m_u + n
        CHECK(problem.constraints[2].id == "stability(i=2)");
        CHECK(problem.constraints[3].id == "deviation(i=2)");
        CHECK(problem.inequalities.size() == 1);
        CHECK(problem.equalities.empty());
        CHECK(problem.coordinate_count() == 27);
        CHECK(problem.strictness_epsilon == doctest::Approx(1e-5).epsilon(1e-12));

        auto sdp = tsobs::lower(problem);
        CHECK(sdp.dimension == 27);
        CHECK(sdp.blocks.size() == 6);  // 4 constraints + pos(P) + pos(Q)
        CHECK(sdp.rows.size() == 3);    // input_gain + pos(lambda1) + pos(lambda2)
        CHECK(sdp.rows[0].id == "input_gain");
    }

    SUBCASE("descriptor mode pins the structural coupling") {
        auto problem = tsobs::assemble_theorem2(model, centroid, bounds, EqualityMode::Descriptor);
        CHECK(problem.constraints.size() == 5);
        CHECK(problem.constraints[4].id == "pos(sym(E^T P))");
        CHECK(problem.constraints[4].sense == Sense::StrictlyPositive);
        REQUIRE(problem.equalities.size() == 1);

        auto sdp = tsobs::lower(problem);
        CHECK(sdp.dimension == 25);  // the coupling map has rank 2
        CHECK(sdp.blocks.size() == 7);
        CHECK(sdp.rows.size() == 3);
    }

    SUBCASE("distinct left vertices are rejected") {
        auto m1 = tsobs::fixtures::bundled_model("example1");
        auto c1 = tsobs::centroid_decompose(m1, CentroidMode::Mean);
        LipschitzBounds b1 = bounds;
        CHECK(kind_of([&] { tsobs::assemble_theorem2(m1, c1, b1, EqualityMode::None); }) ==
              ErrorKind::MultipleLeftVertices);
    }

    SUBCASE("degenerate bound data is rejected") {
        LipschitzBounds b = bounds;
        b.beta1 = 0.0;
        CHECK(kind_of([&] { tsobs::assemble_theorem2(model, centroid, b, EqualityMode::None); }) ==
              ErrorKind::NonpositiveBounds);
        b = bounds;
        b.m[0] = -0.1;
        CHECK(kind_of([&] { tsobs::assemble_theorem2(model, centroid, b, EqualityMode::None); }) ==
              ErrorKind::NonpositiveBounds);
        b = bounds;
        b.m.pop_back();
        CHECK(kind_of([&] { tsobs::assemble_theorem2(model, centroid, b, EqualityMode::None); }) ==
              ErrorKind::DimensionMismatch);
    }
}

TEST_CASE("lowered standard form agrees with direct residual evaluation") {
    auto model1 = tsobs::fixtures::bundled_model("example1");
    auto problem1 = tsobs::assemble_theorem1(model1);
    auto sdp1 = tsobs::lower(problem1);

    auto model2 = tsobs::fixtures::bundled_model("example2");
    auto problem2 = tsobs::assemble_theorem2(model2, tsobs::centroid_decompose(model2, CentroidMode::Mean),
                                             example2_bounds(), EqualityMode::Descriptor);
    auto sdp2 = tsobs::lower(problem2);

    tsupport::DetRng rng(7);
    auto run_trials = [&](const AffineLmiProblem& problem, const tsobs::StandardSdp& sdp) {
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> y(sdp.dimension);
            for (double& v : y) v = rng.uniform(-1.0, 1.0);
            Assignment point = sdp.recover(y);
            auto byid = residuals_by_id(problem, point);

            // Recovered points reproduce their free coordinates exactly.
            for (std::size_t k = 0; k < sdp.dimension; ++k) {
                const auto& ref = sdp.coordinates[sdp.free_coordinates[k]];
                CHECK(point.at(ref.var)(ref.row, ref.col) == y[k]);
            }

            // Eliminated equalities hold at every recovered point.
            for (const auto& eq : problem.equalities)
                CHECK(tsobs::evaluate_expr(eq.expr, point).max_abs() <= 1e-9);

            // Each lowered block is the source expression shifted by the margin.
            for (const auto& block : sdp.blocks) {
                Matrix v = block.f0;
                for (std::size_t k = 0; k < sdp.dimension; ++k) v += y[k] * block.coeffs[k];
                CHECK(std::abs(tsobs::max_eig(v) - (byid.at(block.id) + sdp.strictness_epsilon)) <= 1e-10);
            }
            for (const auto& row : sdp.rows) {
                double val = row.b;
                for (std::size_t k = 0; k < sdp.dimension; ++k) val += row.a[k] * y[k];
                const double expected =
                    row.id.rfind("pos(", 0) == 0 ? -byid.at(row.id) - sdp.strictness_epsilon : -byid.at(row.id);
                CHECK(std::abs(val - expected) <= 1e-12);
            }
        }
    };
    run_trials(problem1, sdp1);
    run_trials(problem2, sdp2);
}

TEST_CASE("block expressions are affine and bitwise symmetric") {
    auto model = tsobs::fixtures::bundled_model("example2");
    auto problem = tsobs::assemble_theorem2(model, tsobs::centroid_decompose(model, CentroidMode::Mean),
                                            example2_bounds(), EqualityMode::Descriptor);
    auto sdp = tsobs::lower(problem);

    tsupport::DetRng rng(11);
    auto draw = [&] {
        std::vector<double> y(sdp.dimension);
        for (double& v : y) v = rng.uniform(-2.0, 2.0);
        return sdp.recover(y);
    };
    const Assignment x = draw(), z = draw();
    const double alpha = 0.375;
    Assignment combo;
    for (const auto& [name, mx] : x) combo[name] = alpha * mx + (1.0 - alpha) * z.at(name);

    for (const auto& c : problem.constraints) {
        const Matrix mx = tsobs::evaluate_expr(c.expr, x);
        const Matrix mz = tsobs::evaluate_expr(c.expr, z);
        CHECK(mx == mx.transposed());
        CHECK(mz == mz.transposed());
        const Matrix mixed = tsobs::evaluate_expr(c.expr, combo);
        const Matrix recombined = alpha * mx + (1.0 - alpha) * mz;
        CHECK(tsobs::max_abs_diff(mixed, recombined) <= 1e-12 * (1.0 + recombined.max_abs()));
    }
}
