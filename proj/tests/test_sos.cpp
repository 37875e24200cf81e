#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lierc/sos.hpp"

using namespace lierc;

namespace {
const std::vector<std::string> kX1 = {"x"};

BsaSet interval_set() {
    BsaSet K;
    K.vars = kX1;
    K.inequalities.push_back(Polynomial::parse("1 - x^2", kX1));
    return K;
}
}  // namespace

TEST_CASE("gram_size reproduces the reported block sides") {
    CHECK(gram_size(13, 5, 1) == 8568);
    CHECK(gram_size(3, 5, 1) == 56);
    CHECK(gram_size(3, 6, 3) == 252);
    CHECK(gram_size(6, 6, 3) == 2772);
    CHECK(gram_size(13, 4, 1) == 2380);
    CHECK(gram_size(4, 4, 1) == 70);
    CHECK(gram_size(0, 0, 1) == 1);
    CHECK_THROWS(gram_size(-1, 2, 1));
}

TEST_CASE("putinar feasibility on an interval") {
    SUBCASE("constant one is wsos at degree 1") {
        SosAssembler as(kX1);
        as.require_wsos("c", PolyLin::from(Polynomial::constant(kX1, 1.0)), interval_set(), 1);
        auto sol = solve_embedded(as.take_problem());
        CHECK(sol.status == SolveStatus::Optimal);
    }
    SUBCASE("the descriptor itself is wsos") {
        SosAssembler as(kX1);
        as.require_wsos("g", PolyLin::from(Polynomial::parse("1 - x^2", kX1)), interval_set(), 1);
        auto sol = solve_embedded(as.take_problem());
        CHECK(sol.status == SolveStatus::Optimal);
    }
    SUBCASE("negative constant is certified infeasible") {
        for (int d = 1; d <= 3; ++d) {
            SosAssembler as(kX1);
            as.require_wsos("neg", PolyLin::from(Polynomial::constant(kX1, -1.0)), interval_set(),
                            d);
            auto sol = solve_embedded(as.take_problem());
            CHECK(sol.status == SolveStatus::PrimalInfeasible);
        }
    }
}

TEST_CASE("wsos optimization recovers a tight bound") {
    // min gamma s.t. gamma - x^2 wsos on [-1, 1]: optimum 1
    SosAssembler as(kX1);
    const int g = as.add_free_scalar("gamma");
    PolyLin expr(kX1);
    expr.add_col_times_mono(g, {0}, 1.0);
    expr.add_poly(Polynomial::parse("-x^2", kX1));
    as.require_wsos("bound", expr, interval_set(), 1);
    as.add_objective(g, 1.0);
    auto sol = solve_embedded(as.take_problem());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equality descriptors admit free multipliers") {
    // gamma - x wsos on {x = 1/2}: optimum gamma = 1/2
    BsaSet K;
    K.vars = kX1;
    K.equalities.push_back(Polynomial::parse("x - 0.5", kX1));
    SosAssembler as(kX1);
    const int g = as.add_free_scalar("gamma");
    PolyLin expr(kX1);
    expr.add_col_times_mono(g, {0}, 1.0);
    expr.add_poly(Polynomial::parse("-x", kX1));
    as.require_wsos("pt", expr, K, 1);
    as.add_objective(g, 1.0);
    auto sol = solve_embedded(as.take_problem());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("scherer reduces to putinar on scalar descriptors") {
    // max over {1 - x^2 >= 0 as 1x1 matrix}: same bound as scalar путь
    BsaSet Kmat;
    Kmat.vars = kX1;
    MatrixPoly M;
    M.entries = {{Polynomial::parse("1 - x^2", kX1)}};
    Kmat.matrix_inequalities.push_back(M);

    SosAssembler as(kX1);
    const int g = as.add_free_scalar("gamma");
    PolyLin expr(kX1);
    expr.add_col_times_mono(g, {0}, 1.0);
    expr.add_poly(Polynomial::parse("-x^2", kX1));
    as.require_wsos("bound", expr, Kmat, 1);
    as.add_objective(g, 1.0);
    auto sol = solve_embedded(as.take_problem());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("scherer with a 2x2 identity descriptor contributes a trace term") {
    // p = gamma - x^2 over {I2 >= 0} (trivially all x): sigma pairing adds
    // tr(sigma_1); bound must still be the global max over the sigma0 cert,
    // infeasible for any finite gamma without box info -> use [-1,1] too.
    BsaSet K;
    K.vars = kX1;
    K.inequalities.push_back(Polynomial::parse("1 - x^2", kX1));
    MatrixPoly M;
    auto one = Polynomial::constant(kX1, 1.0);
    auto zero = Polynomial(kX1);
    M.entries = {{one, zero}, {zero, one}};
    K.matrix_inequalities.push_back(M);

    SosAssembler as(kX1);
    const int g = as.add_free_scalar("gamma");
    PolyLin expr(kX1);
    expr.add_col_times_mono(g, {0}, 1.0);
    expr.add_poly(Polynomial::parse("-x^2", kX1));
    as.require_wsos("bound", expr, K, 1);
    as.add_objective(g, 1.0);
    auto sol = solve_embedded(as.take_problem());
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("structural audit: every emitted gram side matches gram_size") {
    const std::vector<std::string> vars = {"t", "x1", "x2"};
    SosAssembler as(vars);
    BsaSet dom = BsaSet::box(vars, Eigen::Vector3d(0, -1, -1), Eigen::Vector3d(1, 1, 1));
    auto v = as.add_unknown_poly("v", 4);
    PolyLin p = v.poly();
    p.add_poly(Polynomial::parse("1 + x1^2*x2^2", vars));
    as.require_wsos("c1", p, dom);
    as.add_wsos_matrix_value("zeta", dom, 3, 2);
    for (const auto& g : as.grams()) {
        CHECK(g.side() ==
              gram_size(static_cast<int>(vars.size()), g.basis_half_degree, g.matrix_side));
    }
    CHECK(as.largest_block_side() ==
          gram_size(3, 2, 3));  // the 3x3 matrix multiplier dominates here
}

TEST_CASE("matrix wsos value is psd on the domain at solution") {
    // find a 2x2 matrix polynomial M(x) psd on [-1,1] with M(0) = [[2,1],[1,2]]
    SosAssembler as(kX1);
    auto M = as.add_wsos_matrix_value("M", interval_set(), 2, 1);
    // pin values at x = 0 through linear rows on the constant coefficients
    auto pin = [&](const PolyLin& e, double val) {
        PolyLin diff = e;
        diff.add_poly(Polynomial::constant(kX1, -val));
        // keep only the constant-monomial coefficient
        PolyLin c0(kX1);
        auto it = diff.coeffs.find(MultiIndex{0});
        if (it != diff.coeffs.end()) {
            c0.coeffs[it->first] = it->second;
        }
        as.require_zero("pin", c0);
    };
    pin(M[0][0], 2.0);
    pin(M[1][1], 2.0);
    pin(M[0][1], 1.0);
    auto sol = solve_embedded(as.take_problem());
    REQUIRE(sol.status == SolveStatus::Optimal);
}
