#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lierc/polynomial.hpp"

using namespace lierc;

namespace {
const std::vector<std::string> kTX = {"t", "x1", "x2"};
const std::vector<std::string> kX = {"x1", "x2"};

Polynomial random_poly(std::mt19937_64& rng, const std::vector<std::string>& vars, int deg) {
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_int_distribution<int> pick(0, 3);
    Polynomial p(vars);
    for (const auto& alpha : monomials_up_to(static_cast<int>(vars.size()), deg))
        if (pick(rng) == 0) p += Polynomial::monomial(vars, alpha, coef(rng));
    return p;
}
}  // namespace

TEST_CASE("grevlex ordering") {
    CHECK(grevlex_less({0, 0}, {1, 0}));
    CHECK(grevlex_less({0, 1}, {1, 0}));   // same degree, later variable sorts lower
    CHECK(grevlex_less({1, 1}, {2, 0}));
    CHECK_FALSE(grevlex_less({2, 0}, {1, 1}));
    auto basis = monomials_up_to(2, 2);
    REQUIRE(basis.size() == 6);
    CHECK(basis[0] == MultiIndex{0, 0});
    CHECK(basis[1] == MultiIndex{0, 1});
    CHECK(basis[2] == MultiIndex{1, 0});
    CHECK(basis[3] == MultiIndex{0, 2});
    CHECK(basis[4] == MultiIndex{1, 1});
    CHECK(basis[5] == MultiIndex{2, 0});
}

TEST_CASE("parse single variable") {
    auto p = Polynomial::parse("x2", kTX);
    CHECK(p == Polynomial::variable(kTX, "x2"));
}

TEST_CASE("parse flow coordinate with coefficient division") {
    auto p = Polynomial::parse("-x1 - x2 + x1^3/3", kX);
    auto expect = -Polynomial::variable(kX, "x1") - Polynomial::variable(kX, "x2") +
                  Polynomial::variable(kX, "x1").pow(3) / 3.0;
    CHECK(p == expect);
}

TEST_CASE("parse expands squared sum") {
    auto p = Polynomial::parse("(x1+x2)^2", kX);
    auto expect = Polynomial::parse("x1^2 + 2*x1*x2 + x2^2", kX);
    CHECK((p - expect).max_abs_coeff() == doctest::Approx(0.0));
}

TEST_CASE("parse errors carry byte offsets") {
    CHECK_THROWS_AS(Polynomial::parse("x1 + y3", kX), ParseError);
    CHECK_THROWS_AS(Polynomial::parse("x1 + + ", kX), ParseError);
    CHECK_THROWS_AS(Polynomial::parse("x1 / x2", kX), ParseError);
    try {
        Polynomial::parse("x1 + q7", kX);
    } catch (const ParseError& e) {
        CHECK(e.offset == 5);
    }
}

TEST_CASE("parse scientific and implicit multiplication") {
    auto p = Polynomial::parse("1.5e-2 x1^2 - 2x2", kX);
    CHECK(p.coeff({2, 0}) == doctest::Approx(0.015));
    CHECK(p.coeff({0, 1}) == doctest::Approx(-2.0));
}

TEST_CASE("differentiation") {
    auto p = Polynomial::parse("x1^2 + x2^2", kX);
    CHECK(p.differentiate("x1") == Polynomial::parse("2*x1", kX));
    CHECK(Polynomial::constant(kTX, 5.0).differentiate("t").is_zero());
    CHECK(Polynomial::parse("x1^3/3", kX).differentiate("x1") == Polynomial::parse("x1^2", kX));
    CHECK_THROWS_AS(p.differentiate("zz"), PolynomialError);
}

TEST_CASE("evaluation") {
    auto p = Polynomial::parse("x1^2 + x2^2", kX);
    std::vector<double> pt = {1.0, 1.0};
    CHECK(p.eval(pt) == doctest::Approx(2.0));
    CHECK(Polynomial(kX).eval(pt) == 0.0);
    auto q = Polynomial::parse("x1^3/3", {"x1"});
    std::vector<double> pt1 = {1.5};
    CHECK(q.eval(pt1) == doctest::Approx(1.125));
}

TEST_CASE("horner evaluation matches direct term sum on random polynomials") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int rep = 0; rep < 40; ++rep) {
        auto p = random_poly(rng, kTX, 5);
        std::vector<double> pt = {coord(rng), coord(rng), coord(rng)};
        double direct = 0;
        for (const auto& [alpha, c] : p.terms()) {
            double m = c;
            for (std::size_t i = 0; i < alpha.size(); ++i)
                for (int k = 0; k < alpha[i]; ++k) m *= pt[i];
            direct += m;
        }
        CHECK(p.eval(pt) == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("print/parse round trip and ring identities") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 60; ++rep) {
        auto p = random_poly(rng, kTX, 4);
        auto q = random_poly(rng, kTX, 4);
        auto back = Polynomial::parse(p.print(), kTX);
        CHECK((back - p).max_abs_coeff() <= 1e-12 * std::max(1.0, p.max_abs_coeff()));
        CHECK(((p + q) - q - p).max_abs_coeff() <= 1e-12 * std::max(1.0, p.max_abs_coeff()));
        if (!p.is_zero() && !q.is_zero()) CHECK((p * q).degree() == p.degree() + q.degree());
        CHECK((p * q - q * p).max_abs_coeff() == doctest::Approx(0.0));
    }
}

TEST_CASE("lie_terms drift and channels") {
    PolynomialVector rotation({Polynomial::parse("x2", kX), Polynomial::parse("-x1", kX)});

    SUBCASE("rotation conserves the norm") {
        auto v = Polynomial::parse("x1^2 + x2^2", kTX);
        auto lt = lie_terms(v, rotation, {});
        CHECK(lt.base.is_zero());
        CHECK(lt.per_channel.empty());
    }

    SUBCASE("v = t gives unit drift") {
        auto v = Polynomial::variable(kTX, "t");
        PolynomialVector f0({Polynomial::parse("x1^2", kX), Polynomial::parse("x1*x2", kX)});
        PolynomialVector ch({Polynomial::parse("1", kX), Polynomial::parse("x2", kX)});
        auto lt = lie_terms(v, f0, {ch});
        CHECK(lt.base == Polynomial::constant(kTX, 1.0));
        CHECK(lt.per_channel[0].is_zero());
    }

    SUBCASE("flow second coordinate") {
        auto v = Polynomial::variable(kTX, "x2");
        PolynomialVector flow({Polynomial::parse("x2", kX), Polynomial::parse("-x1 - x2 + x1^3/3", kX)});
        auto lt = lie_terms(v, flow, {});
        CHECK(lt.base == Polynomial::parse("-x1 - x2 + x1^3/3", kTX));
    }

    SUBCASE("dimension mismatch throws") {
        auto v = Polynomial::variable(kTX, "x2");
        PolynomialVector bad({Polynomial::parse("x2", kX)});
        CHECK_THROWS_AS(lie_terms(v, bad, {}), PolynomialError);
    }
}

TEST_CASE("lie_terms is linear and reassembles pointwise") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    PolynomialVector f0({Polynomial::parse("x2", kX), Polynomial::parse("-x1 - x2 + x1^3/3", kX)});
    std::vector<PolynomialVector> channels = {
        PolynomialVector({Polynomial::parse("x1", kX), Polynomial::parse("0", kX)}),
        PolynomialVector({Polynomial::parse("0", kX), Polynomial::parse("x1*x2", kX)})};

    auto v1 = random_poly(rng, kTX, 4);
    auto v2 = random_poly(rng, kTX, 4);
    const double a = 0.7, b = -1.3;
    auto lt1 = lie_terms(v1, f0, channels);
    auto lt2 = lie_terms(v2, f0, channels);
    auto ltc = lie_terms(v1 * a + v2 * b, f0, channels);
    CHECK((ltc.base - (lt1.base * a + lt2.base * b)).max_abs_coeff() <= 1e-10);
    for (int l = 0; l < 2; ++l)
        CHECK((ltc.per_channel[l] - (lt1.per_channel[l] * a + lt2.per_channel[l] * b))
                  .max_abs_coeff() <= 1e-10);

    // pointwise reassembly in (t, x, w) at random points
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> tx = {coord(rng), coord(rng), coord(rng)};
        std::vector<double> w = {coord(rng), coord(rng)};
        auto lt = lie_terms(v1, f0, channels);
        double assembled = lt.base.eval(tx);
        for (int l = 0; l < 2; ++l) assembled += w[l] * lt.per_channel[l].eval(tx);

        // independent route: numeric directional derivative via gradient polys
        double direct = v1.differentiate(0).eval(tx);
        std::vector<double> x = {tx[1], tx[2]};
        for (int i = 0; i < 2; ++i) {
            double fi = f0[i].eval(x);
            for (int l = 0; l < 2; ++l) fi += w[l] * channels[l][i].eval(x);
            direct += v1.differentiate(i + 1).eval(tx) * fi;
        }
        CHECK(assembled == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("partial_eval and scale_var") {
    auto p = Polynomial::parse("t^2*x1 + 3*t + x2", kTX);
    auto at0 = p.partial_eval(0, 0.0);
    CHECK(at0 == Polynomial::parse("x2", kTX));
    auto scaled = p.scale_var(0, 2.0);
    CHECK(scaled == Polynomial::parse("4*t^2*x1 + 6*t + x2", kTX));
}
