#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "certimdp/rational.hpp"
#include "oracles.hpp"

using namespace certimdp;

TEST_CASE("arithmetic is exact on random rationals") {
    oracle::Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Rational a = make_rational(rng.below(2000) - 1000, 1 + rng.below(50));
        Rational c = make_rational(rng.below(2000) - 1000, 1 + rng.below(50));
        REQUIRE((a + c) - c == a);
        if (c != 0) REQUIRE((a / c) * c == a);
    }
}

TEST_CASE("construction canonicalizes") {
    REQUIRE(make_rational(2, 6) == make_rational(1, 3));
    REQUIRE(make_rational(1, -2) == make_rational(-1, 2));
    REQUIRE(den(make_rational(-4, -8)) == 2);
    REQUIRE_THROWS_AS(make_rational(1, 0), rational_error);
}

TEST_CASE("parsing forms") {
    REQUIRE(parse_rational("3/4") == make_rational(3, 4));
    REQUIRE(parse_rational("0.25") == make_rational(1, 4));
    REQUIRE(parse_rational("2") == Rational(2));
    REQUIRE(parse_rational("2/4") == make_rational(1, 2));  // lenient mode canonicalizes
    REQUIRE_THROWS_AS(parse_rational("2/4", /*strict=*/true), rational_error);
    REQUIRE_THROWS_AS(parse_rational("1/-2"), rational_error);
    REQUIRE_THROWS_AS(parse_rational("x", true), rational_error);
    REQUIRE(rational_to_string(Rational(1)) == "1/1");
    REQUIRE(rational_to_string(make_rational(-1, 2)) == "-1/2");
}

TEST_CASE("denominator guard") {
    setenv("CERTIMDP_MAX_DENOM_BITS", "8", 1);
    REQUIRE_NOTHROW(check_denom_bits(make_rational(1, 200)));
    REQUIRE_THROWS_AS(check_denom_bits(make_rational(1, 100000)), rational_error);
    unsetenv("CERTIMDP_MAX_DENOM_BITS");
    REQUIRE_NOTHROW(check_denom_bits(make_rational(1, 100000)));
}
