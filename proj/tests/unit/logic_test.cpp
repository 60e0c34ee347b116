#include "doctest.h"
#include "folim/logic.hpp"
#include "support/fixtures.hpp"

using namespace folim;

TEST_CASE("parse flags") {
  auto a = parse_formula("exists_x y . E1(y,x)");
  CHECK(a.is_local());
  CHECK(a.quantifier_depth() == 1);
  CHECK(a.free_variables() == std::vector<std::string>{"x"});

  auto b = parse_formula("forall x . x = x");
  CHECK_FALSE(b.is_local());
  CHECK(b.quantifier_depth() == 1);
  CHECK(b.free_variables().empty());

  auto c = parse_formula("exists_z x . forall_x y . y = z");
  CHECK(c.is_local());
  CHECK(c.quantifier_depth() == 2);
  CHECK(c.free_variables() == std::vector<std::string>{"z"});
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_formula("E1(x,"), FormulaSyntaxError);
  CHECK_THROWS_AS(parse_formula("E3(x,y)", 2), FormulaSyntaxError);
  CHECK_THROWS_AS(parse_formula("x = y )"), FormulaSyntaxError);
  CHECK_THROWS_AS(parse_formula("exists_x x . x = x"), FormulaSyntaxError);
  try {
    parse_formula("x = $");
  } catch (const FormulaSyntaxError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("round trip through to_string") {
  auto f = parse_formula("!E1(x,y) & (kept(x,y) | exists_x z . U2(z))");
  auto g = parse_formula(f.to_string());
  CHECK(g.to_string() == f.to_string());
}

TEST_CASE("evaluation on P3") {
  auto t = fixtures::p3();
  auto e = parse_formula("E1(x,y)");
  CHECK(evaluate(t, e, {{"x", 0}, {"y", 1}}));
  CHECK_FALSE(evaluate(t, e, {{"x", 1}, {"y", 0}}));
  auto child = parse_formula("exists_x y . E1(y,x)");
  CHECK(evaluate(t, child, {{"x", 1}}));
  CHECK_FALSE(evaluate(t, child, {{"x", 0}}));
  CHECK_THROWS_AS(evaluate(t, e, {{"x", 0}}), InputError);
}

TEST_CASE("stone pairings on P3") {
  auto t = fixtures::p3();
  CHECK(stone_pairing(t, parse_formula("exists_x y . E1(y,x)")).value == Rational(1, 3));
  CHECK(stone_pairing(t, parse_formula("x = x")).value == Rational(1));
  CHECK(stone_pairing(t, parse_formula("E1(x,y)")).value == Rational(2, 9));
  CHECK(stone_pairing(t, parse_formula("exists x . E1(x,x)")).value == Rational(0));
}

TEST_CASE("stone pairing budget") {
  auto t = fixtures::path(30);
  auto f = parse_formula("E1(x,y) | E1(y,z)");
  StoneOptions tight;
  tight.enumeration_budget = 100;
  CHECK_THROWS_AS(stone_pairing(t, f, tight), BudgetExceeded);
  tight.allow_sampling = true;
  auto est = stone_pairing(t, f, tight);
  CHECK(est.estimated);
  auto exact = stone_pairing(t, f);
  double p = boost::rational_cast<double>(exact.value);
  CHECK(std::abs(boost::rational_cast<double>(est.value) - p) <= 3 * est.standard_error + 1e-12);
}

TEST_CASE("local games on P3") {
  auto t = fixtures::p3();
  for (int d = 0; d <= 3; ++d) CHECK(local_ef_winner(t, 0, t, 2, d) == Player::Duplicator);
  CHECK(local_ef_winner(t, 0, t, 1, 1) == Player::Spoiler);
  CHECK(local_ef_winner(t, 1, t, 1, 3) == Player::Duplicator);
}

TEST_CASE("marks are visible only up to the game length") {
  auto t = fixtures::path(3);
  auto m = t;
  m.set_mark(3, 1);
  CHECK(local_ef_winner(t, 1, m, 1, 2) == Player::Duplicator);
  CHECK(local_ef_winner(t, 1, m, 1, 3) == Player::Spoiler);
}

TEST_CASE("global games") {
  auto t = fixtures::p3();
  CHECK(global_ef_equivalent(t, t, 3));
  // P3 and P4 (both oriented to one end) differ by "some vertex has a grandparent".
  auto a = fixtures::path(3);
  auto b = fixtures::path(4);
  CHECK(global_ef_equivalent(a, b, 1));
  CHECK(global_ef_equivalent(a, fixtures::path(1), 1));
  CHECK_FALSE(global_ef_equivalent(a, fixtures::path(1), 2));
  CHECK_FALSE(global_ef_equivalent(a, b, 3));
}
