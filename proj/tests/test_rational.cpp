#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "lsfix/rational.hpp"

using lsfix::BigInt;
using lsfix::Rational;

TEST_CASE("rationals are stored in lowest terms with positive denominator") {
    Rational r(6, -4);
    CHECK(r.numerator() == -3);
    CHECK(r.denominator() == 2);
    CHECK(r.str() == "-3/2");
    CHECK(Rational(0, 7).str() == "0/1");
}

TEST_CASE("arithmetic is exact") {
    Rational w(1, 100000);
    CHECK(w * Rational(100) * Rational(100) == Rational(1, 10));
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 10) < Rational(1));
    CHECK_THROWS(Rational(1, 0));
    CHECK_THROWS(Rational(1) / Rational(0));
}

TEST_CASE("parsing accepts fractions, integers and decimals") {
    CHECK(Rational::parse("10/1") == Rational(10));
    CHECK(Rational::parse("-3/9") == Rational(-1, 3));
    CHECK(Rational::parse("42") == Rational(42));
    CHECK(Rational::parse("0.00001") == Rational(1, 100000));
    CHECK(Rational::parse("-2.5") == Rational(-5, 2));
    CHECK_THROWS_AS(Rational::parse("abc"), std::invalid_argument);
    CHECK_THROWS_AS(Rational::parse(""), std::invalid_argument);
    CHECK_THROWS_AS(Rational::parse("1."), std::invalid_argument);
}

TEST_CASE("round trip through the serialized form") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> dist(-1000, 1000);
    for (int i = 0; i < 200; ++i) {
        std::int64_t num = dist(rng);
        std::int64_t den = dist(rng);
        if (den == 0) continue;
        Rational r(num, den);
        CHECK(Rational::parse(r.str()) == r);
    }
}

TEST_CASE("product normalization matches brute-force gcd reduction") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> dist(1, 500);
    for (int i = 0; i < 200; ++i) {
        std::int64_t a = dist(rng), b = dist(rng), c = dist(rng), d = dist(rng);
        Rational product = Rational(a, b) * Rational(c, d);
        std::int64_t num = a * c, den = b * d;
        std::int64_t g = std::gcd(num, den);
        CHECK(product.numerator() == num / g);
        CHECK(product.denominator() == den / g);
    }
}
