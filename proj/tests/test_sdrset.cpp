#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lierc/sdr_set.hpp"

using namespace lierc;

TEST_CASE("membership on the unit box") {
    auto W = SdrSet::unit_box(3);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
    CHECK(membership(W, w));
    w[0] = 2.0;
    CHECK_FALSE(membership(W, w));
    w[0] = 1.0;
    CHECK(membership(W, w));  // boundary point
}

TEST_CASE("membership on the elliptope") {
    auto W = SdrSet::elliptope3();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
    CHECK(membership(W, ones));  // all-ones matrix has eigenvalues {3,0,0}
    Eigen::VectorXd outside(3);
    outside << 1.0, 1.0, -1.0;
    CHECK_FALSE(membership(W, outside));
    CHECK(membership(W, Eigen::VectorXd::Zero(3)));
}

TEST_CASE("membership through a lifted representation") {
    // projection of the 2d unit box onto its first coordinate:
    // W = {w in R | exists lam: (w, lam) in box}
    SdrSet W;
    W.L = 1;
    SdrBlock blk;
    blk.cone = {ConeKind::Nonnegative, 4};
    blk.A.resize(4, 1);
    blk.A << 1, -1, 0, 0;
    blk.G.resize(4, 1);
    blk.G << 0, 0, 1, -1;
    blk.e.resize(4);
    blk.e << 1, 1, 1, 1;
    W.blocks.push_back(blk);
    CHECK(membership(W, Eigen::VectorXd::Constant(1, 0.5)));
    CHECK_FALSE(membership(W, Eigen::VectorXd::Constant(1, 1.5)));
}

TEST_CASE("incenters of the three base cones") {
    CHECK(incenter({ConeKind::Nonnegative, 1})[0] == 1.0);
    auto qi = incenter({ConeKind::SecondOrder, 4});
    CHECK(qi.head(3).norm() == 0.0);
    CHECK(qi[3] == 1.0);
    auto pi2 = incenter({ConeKind::Psd, 2});
    Eigen::MatrixXd M = smat(pi2);
    CHECK(M(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(M(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(M(0, 1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(incenter({ConeKind::RotatedSecondOrder, 3}), SdrError);
}

TEST_CASE("slater points and singleton detection") {
    auto box = SdrSet::unit_box(2);
    auto r1 = check_slater(box);
    REQUIRE(r1.kind == SlaterResult::Kind::SlaterPoint);
    CHECK(membership(box, r1.w));
    CHECK(r1.margin > 0.1);

    auto ell = check_slater(SdrSet::elliptope3());
    REQUIRE(ell.kind == SlaterResult::Kind::SlaterPoint);
    CHECK(ell.w.lpNorm<Eigen::Infinity>() < 0.5);  // near the identity matrix

    Eigen::VectorXd theta(2);
    theta << 0.3, -0.7;
    auto sing = check_slater(SdrSet::singleton(theta));
    REQUIRE(sing.kind == SlaterResult::Kind::Singleton);
    CHECK((sing.w - theta).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("slater margin point is strictly interior") {
    auto W = SdrSet::unit_box(3);
    auto r = check_slater(W);
    REQUIRE(r.kind == SlaterResult::Kind::SlaterPoint);
    // strict margin: scaled copies remain inside
    CHECK(membership(W, r.w * 1.0));
    for (const auto& blk : W.blocks) {
        Eigen::VectorXd s = blk.A * r.w + blk.e;
        CHECK(s.minCoeff() > 1e-3);
    }
}

TEST_CASE("vertices of boxes and simplices") {
    Polytope box;
    box.gamma.resize(4, 2);
    box.gamma << 1, 0, -1, 0, 0, 1, 0, -1;
    box.h = Eigen::VectorXd::Ones(4);
    auto vs = vertices(box);
    REQUIRE(vs.size() == 4);
    for (const auto& v : vs) CHECK(v.lpNorm<Eigen::Infinity>() == doctest::Approx(1.0));

    Polytope simplex;
    simplex.gamma.resize(3, 2);
    simplex.gamma << -1, 0, 0, -1, 1, 1;
    simplex.h.resize(3);
    simplex.h << 0, 0, 1;
    auto sv = vertices(simplex);
    REQUIRE(sv.size() == 3);

    Polytope skew;  // |w1| <= 1, |w1 + w2| <= 1
    skew.gamma.resize(4, 2);
    skew.gamma << 1, 0, -1, 0, 1, 1, -1, -1;
    skew.h = Eigen::VectorXd::Ones(4);
    auto kv = vertices(skew);
    REQUIRE(kv.size() == 4);
    std::vector<Eigen::Vector2d> expect = {{1, 0}, {1, -2}, {-1, 0}, {-1, 2}};
    for (const auto& e : expect) {
        bool found = false;
        for (const auto& v : kv) found = found || (v - e).norm() < 1e-9;
        CHECK(found);
    }
}

TEST_CASE("vertex membership and scaled exteriority") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 5; ++rep) {
        // random bounded polytope: box plus random cuts
        Polytope P;
        P.gamma.resize(6, 2);
        P.gamma << 1, 0, -1, 0, 0, 1, 0, -1, u(rng), u(rng), u(rng), u(rng);
        P.h.resize(6);
        P.h << 1, 1, 1, 1, 0.8 + std::abs(u(rng)), 0.8 + std::abs(u(rng));
        auto W = P.to_sdr();
        for (const auto& v : vertices(P)) {
            CHECK(membership(W, v, 1e-7));
            if (v.norm() > 1e-9) {
                // push just beyond the support in the outward direction
                Eigen::VectorXd dir = v.normalized();
                auto [wmax, val] = support_point(W, dir);
                Eigen::VectorXd beyond = v + dir * (1e-3 * (1.0 + std::abs(val)));
                if (dir.dot(beyond) > val + 1e-7) CHECK_FALSE(membership(W, beyond, 1e-9));
            }
        }
    }
}

TEST_CASE("unbounded polytope rejected by vertices") {
    Polytope P;  // w1 <= 1 only: unbounded
    P.gamma.resize(1, 2);
    P.gamma << 1, 0;
    P.h = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(vertices(P), SdrError);
}

TEST_CASE("chebyshev center of boxes") {
    Polytope box;
    box.gamma.resize(4, 2);
    box.gamma << 1, 0, -1, 0, 0, 1, 0, -1;
    box.h = Eigen::VectorXd::Ones(4);
    auto [c, r] = chebyshev_center(box);
    CHECK(c.norm() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r == doctest::Approx(1.0).epsilon(1e-6));

    // translation equivariance: [0,2]^2
    Polytope shifted = box;
    shifted.h << 2, 0, 2, 0;
    auto [c2, r2] = chebyshev_center(shifted);
    CHECK(c2[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c2[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r2 == doctest::Approx(r).epsilon(1e-6));
}

TEST_CASE("chebyshev center on random translated polytopes") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 5; ++rep) {
        Polytope P;
        P.gamma.resize(5, 2);
        for (int i = 0; i < 5; ++i) {
            const double ang = 2 * M_PI * i / 5.0 + 0.1 * u(rng);
            P.gamma.row(i) << std::cos(ang), std::sin(ang);
        }
        P.h = Eigen::VectorXd::Constant(5, 1.0);
        auto [c, r] = chebyshev_center(P);
        Eigen::Vector2d shift(u(rng), u(rng));
        Polytope Q = P;
        Q.h = P.h + P.gamma * shift;
        auto [c2, r2] = chebyshev_center(Q);
        CHECK((c2 - (c + shift)).norm() < 1e-5);
        CHECK(r2 == doctest::Approx(r).epsilon(1e-6));
    }
}

TEST_CASE("empty polytope raises") {
    Polytope P;
    P.gamma.resize(2, 1);
    P.gamma << 1, -1;
    P.h.resize(2);
    P.h << -1, -1;  // w <= -1 and w >= 1
    CHECK_THROWS_AS(chebyshev_center(P), SdrError);
}

TEST_CASE("support points") {
    auto box = SdrSet::unit_box(3);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1[0] = 1.0;
    auto [w, val] = support_point(box, e1);
    CHECK(val == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-5));

    auto ell = SdrSet::elliptope3();
    Eigen::VectorXd dir = Eigen::VectorXd::Ones(3) / std::sqrt(3.0);
    auto [we, vale] = support_point(ell, dir);
    CHECK(vale == doctest::Approx(std::sqrt(3.0)).epsilon(1e-5));
    CHECK((we - Eigen::VectorXd::Ones(3)).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("projection onto a set") {
    auto box = SdrSet::unit_box(2);
    Eigen::VectorXd p(2);
    p << 3.0, 0.2;
    auto w = project_onto(box, p);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(w[1] == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("rotated second order membership via lowering") {
    // (u, v, z) with |u|^2 <= v z: identity check (0, 1, 1) in, (2, 1, 1) out
    SdrSet W;
    W.L = 3;
    SdrBlock blk;
    blk.cone = {ConeKind::RotatedSecondOrder, 3};
    blk.A = Eigen::MatrixXd::Identity(3, 3);
    blk.G.resize(3, 0);
    blk.e = Eigen::VectorXd::Zero(3);
    W.blocks.push_back(blk);
    Eigen::VectorXd in(3), out(3);
    in << 0.0, 1.0, 1.0;
    out << 2.0, 1.0, 1.0;
    CHECK(membership(W, in));
    CHECK_FALSE(membership(W, out));
}

TEST_CASE("bsa sets") {
    std::vector<std::string> vars = {"x1", "x2"};
    auto B = BsaSet::box(vars, Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
    std::vector<double> inside = {0.3, -0.5}, outside = {1.2, 0.0};
    CHECK(B.contains(inside));
    CHECK_FALSE(B.contains(outside));

    auto P = BsaSet::point(vars, Eigen::Vector2d(0.5, -0.25));
    Eigen::VectorXd v;
    REQUIRE(P.is_point(&v));
    CHECK(v[0] == doctest::Approx(0.5));
    CHECK(v[1] == doctest::Approx(-0.25));
    CHECK_FALSE(B.is_point());
}
