#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "stokes/forms.hpp"

using namespace stokes;

namespace {

Expression p(const std::string& text) { return parse(text); }

Environment random_env(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Environment env;
  for (const auto& name : indexed_names('y', n)) env[name] = u(rng);
  return env;
}

// Independent oracle for the sign of a permutation: count the transpositions
// needed by selection sort.
int transposition_sign(std::vector<int> v) {
  int sign = 1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto it = std::min_element(v.begin() + static_cast<long>(i), v.end());
    if (it != v.begin() + static_cast<long>(i)) {
      std::iter_swap(it, v.begin() + static_cast<long>(i));
      sign = -sign;
    }
  }
  return sign;
}

}  // namespace

TEST_CASE("canonicalize sorts indices and tracks the sign") {
  const Expression b = p("y1*y2");
  auto t = canonicalize({2, 1}, b, 3);
  REQUIRE(t);
  CHECK(t->index.indices() == std::vector<int>{1, 2});
  CHECK(identical(t->coeff, -b));
  CHECK_FALSE(canonicalize({3, 3}, b, 3));
  auto even = canonicalize({3, 1, 2}, b, 3);
  REQUIRE(even);
  CHECK(even->index.indices() == std::vector<int>{1, 2, 3});
  CHECK(identical(even->coeff, b));
  CHECK_THROWS_AS(canonicalize({0, 1}, b, 3), std::invalid_argument);
  CHECK_THROWS_AS(canonicalize({4}, b, 3), std::invalid_argument);
}

TEST_CASE("permutation signs agree with a transposition count") {
  std::vector<int> v{1, 2, 3, 4, 5};
  do {
    CHECK(permutation_sign(v) == transposition_sign(v));
  } while (std::next_permutation(v.begin(), v.end()));
  CHECK(permutation_sign({1, 2, 1}) == 0);
}

TEST_CASE("canonicalization is idempotent and sign-consistent") {
  std::vector<int> base{1, 3, 4};
  std::vector<int> perm = base;
  do {
    auto t = canonicalize(perm, p("y2"), 4);
    REQUIRE(t);
    CHECK(t->index.indices() == base);
    auto again = canonicalize(t->index.indices(), t->coeff, 4);
    CHECK(identical(again->coeff, t->coeff));
    const double value = evaluate(t->coeff, {{"y2", 1.0}});
    CHECK(value == static_cast<double>(transposition_sign(perm)));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("multi-indices must be strictly increasing and in range") {
  CHECK_NOTHROW(MultiIndex({1, 3}, 3));
  CHECK_THROWS_AS(MultiIndex({3, 1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(MultiIndex({1, 1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(MultiIndex({1, 4}, 3), std::invalid_argument);
}

TEST_CASE("forms store canonical, merged terms") {
  DifferentialForm w(2, 3, {{{2, 1}, p("y3")}, {{1, 2}, p("y1")}, {{3, 3}, p("y2")}, {{1, 3}, p("0")}});
  REQUIRE(w.terms().size() == 1);
  CHECK(w.terms()[0].index.indices() == std::vector<int>{1, 2});
  CHECK(evaluate(w.terms()[0].coeff, {{"y1", 2.0}, {"y3", 5.0}}) == -3.0);
  CHECK_THROWS_AS(DifferentialForm(3, 2), std::invalid_argument);
  CHECK_THROWS_AS(DifferentialForm(1, 2, {{{1, 2}, p("y1")}}), std::invalid_argument);
  CHECK_THROWS_AS(DifferentialForm(1, 2, {{{1}, p("x1")}}), std::invalid_argument);
  CHECK_THROWS_AS(DifferentialForm(1, 2, {{{1}, p("y3")}}), std::invalid_argument);
}

TEST_CASE("exterior derivative by hand") {
  const DifferentialForm w(1, 2, {{{2}, p("y1")}});
  const DifferentialForm dw = exterior_derivative(w);
  CHECK(dw.degree() == 2);
  REQUIRE(dw.terms().size() == 1);
  CHECK(dw.terms()[0].coeff.is_constant(1.0));

  CHECK(exterior_derivative(DifferentialForm(1, 3, {{{1}, p("2")}, {{3}, p("pi")}})).is_zero());

  // d(P dy1 + Q dy2) = (Q_1 - P_2) dy1 dy2
  const DifferentialForm green(1, 2, {{{1}, p("-y2^3")}, {{2}, p("y1^3")}});
  const DifferentialForm dg = exterior_derivative(green);
  REQUIRE(dg.terms().size() == 1);
  CHECK(evaluate(dg.terms()[0].coeff, {{"y1", 2.0}, {"y2", 1.0}}) == doctest::Approx(15.0));

  // d(b dy2 dy3) = b_1 dy1 dy2 dy3
  const DifferentialForm flux(2, 3, {{{2, 3}, p("y1*y2")}, {{1, 2}, p("exp(y3)")}});
  const DifferentialForm div = exterior_derivative(flux);
  REQUIRE(div.terms().size() == 1);
  CHECK(evaluate(div.terms()[0].coeff, {{"y1", 0.3}, {"y2", 0.5}, {"y3", 0.0}}) == doctest::Approx(1.5));

  CHECK_THROWS_AS(exterior_derivative(DifferentialForm(2, 2)), std::invalid_argument);
}

TEST_CASE("d of d vanishes on a hand example") {
  const DifferentialForm w(1, 3, {{{3}, p("sin(y1*y2)")}});
  const DifferentialForm ddw = exterior_derivative(exterior_derivative(w));
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Environment env = random_env(rng, 3);
    for (const auto& t : ddw.terms()) CHECK(std::fabs(evaluate(t.coeff, env)) <= 1e-9);
  }
  const DdZeroProbe probe(w);
  std::vector<double> y{0.4, -0.7, 0.2};
  CHECK(probe(y).violation <= 1e-12);
  CHECK(probe(y).scale > 0.0);
  CHECK(DdZeroProbe(DifferentialForm(2, 3, {{{1, 2}, p("y3^2")}})).term_count() == 0);
}

TEST_CASE("add and scale") {
  const DifferentialForm a(1, 2, {{{1}, p("y1")}, {{2}, p("y2")}});
  const DifferentialForm cancelled = add(a, scale(a, p("-1")));
  for (const auto& t : cancelled.terms())
    CHECK(evaluate(t.coeff, {{"y1", 0.7}, {"y2", -1.3}}) == 0.0);
  const DifferentialForm b(1, 3, {{{1}, p("y1")}});
  const DifferentialForm c(1, 3, {{{3}, p("y2")}});
  CHECK(add(b, c).terms().size() == 2);
  const DifferentialForm sum = add(b, DifferentialForm(1, 3, {{{1}, p("y3")}}));
  REQUIRE(sum.terms().size() == 1);
  CHECK(evaluate(sum.terms()[0].coeff, {{"y1", 1.0}, {"y3", 2.0}}) == 3.0);
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(add(a, DifferentialForm(2, 2)), std::invalid_argument);
}

TEST_CASE("exterior derivative is linear") {
  const DifferentialForm w1(1, 3, {{{1}, p("y2*sin(y3)")}, {{2}, p("exp(y1*y3)")}});
  const DifferentialForm w2(1, 3, {{{3}, p("y1^2*y2")}, {{2}, p("cos(y1 + y2)")}});
  const Expression a = Expression::constant(2.5);
  const DifferentialForm lhs = exterior_derivative(add(scale(w1, a), w2));
  const DifferentialForm r1 = exterior_derivative(w1);
  const DifferentialForm r2 = exterior_derivative(w2);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const Environment env = random_env(rng, 3);
    auto coeff = [&](const DifferentialForm& f, const MultiIndex& idx) {
      for (const auto& t : f.terms())
        if (t.index == idx) return evaluate(t.coeff, env);
      return 0.0;
    };
    for (const auto& idx : {MultiIndex({1, 2}, 3), MultiIndex({1, 3}, 3), MultiIndex({2, 3}, 3)}) {
      const double expected = 2.5 * coeff(r1, idx) + coeff(r2, idx);
      CHECK(std::fabs(coeff(lhs, idx) - expected) <= 1e-12 * (1.0 + std::fabs(expected)));
    }
  }
}
