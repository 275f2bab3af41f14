#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stokes/chart.hpp"
#include "stokes/quadrature.hpp"

using namespace stokes;

namespace {

NormalSet make_set(std::vector<std::pair<std::string, std::string>> bounds) {
  std::vector<Bound> out;
  for (auto& [lo, hi] : bounds) out.push_back({parse(lo), parse(hi)});
  return NormalSet(std::move(out));
}

ChartMap chart(int k, std::vector<std::string> components) {
  std::vector<Expression> out;
  for (auto& c : components) out.push_back(parse(c));
  return ChartMap(k, std::move(out));
}

std::vector<double> v(std::initializer_list<double> x) { return x; }

}  // namespace

TEST_CASE("Gauss-Legendre rules on [0,1]") {
  const GaussRule& two = gauss_legendre(2);
  CHECK(two.nodes[0] == doctest::Approx(0.5 - 0.5 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(two.nodes[1] == doctest::Approx(0.5 + 0.5 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(two.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  const GaussRule& three = gauss_legendre(3);
  CHECK(three.nodes[1] == 0.5);
  CHECK(three.nodes[2] == doctest::Approx(0.5 + 0.5 * std::sqrt(0.6)).epsilon(1e-15));
  CHECK(three.weights[0] == doctest::Approx(5.0 / 18.0).epsilon(1e-15));
  CHECK(three.weights[1] == doctest::Approx(8.0 / 18.0).epsilon(1e-15));
  for (int q : {1, 4, 12, 16, 40}) {
    const GaussRule& r = gauss_legendre(q);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      sum += r.weights[i];
      CHECK(r.nodes[i] > 0.0);
      CHECK(r.nodes[i] < 1.0);
      if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
}

TEST_CASE("cubature examples") {
  const QuadratureSpec spec{3, 2, 1};
  CHECK(std::fabs(integrate_unit_cube([](auto) { return 1.0; }, 3, spec) - 1.0) <= 1e-15);
  CHECK(std::fabs(integrate_unit_cube([](auto t) { return t[0] * t[0]; }, 1, QuadratureSpec{2, 1, 1}) - 1.0 / 3.0) <=
        1e-15);
  CHECK(std::fabs(integrate_unit_cube([](auto t) { return t[0] * t[1] * t[2]; }, 3, spec) - 0.125) <= 1e-15);
  CHECK(integrate_unit_cube([](auto t) { return t.empty() ? 7.0 : 0.0; }, 0, spec) == 7.0);
}

TEST_CASE("Gauss exactness for tensor polynomials up to degree 2q-1") {
  for (int q = 1; q <= 8; ++q) {
    for (int m : {1, 3}) {
      const QuadratureSpec spec{q, m, 1};
      const int p = 2 * q - 1;
      // prod_i t_i^p over [0,1]^2 has the closed form (1/(p+1))^2.
      const double exact = 1.0 / ((p + 1.0) * (p + 1.0));
      const double got = integrate_unit_cube([p](auto t) { return std::pow(t[0], p) * std::pow(t[1], p); }, 2, spec);
      CHECK(std::fabs(got - exact) <= 1e-13 * exact);
    }
  }
  // One degree more is no longer exact for a single cell.
  const double inexact = integrate_unit_cube([](auto t) { return std::pow(t[0], 4); }, 1, QuadratureSpec{2, 1, 1});
  CHECK(std::fabs(inexact - 0.2) > 1e-6);
}

TEST_CASE("non-finite integrand values name the node") {
  try {
    integrate_unit_cube([](auto t) { return 1.0 / (t[0] - 0.5); }, 1, QuadratureSpec{3, 1, 1});
    FAIL("expected a quadrature error");
  } catch (const QuadratureError& e) {
    CHECK(std::string(e.what()).find("0.5") != std::string::npos);
  }
  CHECK_THROWS_AS(integrate_unit_cube([](auto) { return 1.0; }, 1, QuadratureSpec{0, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(integrate_unit_cube([](auto) { return 1.0; }, 1, QuadratureSpec{1, 0, 1}), std::invalid_argument);
}

TEST_CASE("integrand exceptions propagate, first cell first") {
  auto f = [](std::span<const double> t) -> double {
    if (t[0] > 0.5) throw std::runtime_error(t[0] > 0.75 ? "late" : "early");
    return 1.0;
  };
  for (int threads : {1, 2, 4}) {
    try {
      integrate_unit_cube(f, 1, QuadratureSpec{2, 4, threads});
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "early");
    }
  }
}

TEST_CASE("result does not depend on the thread count") {
  auto f = [](std::span<const double> t) { return std::sin(10 * t[0]) * std::exp(t[1]) / (1.0 + t[2]); };
  const double one = integrate_unit_cube(f, 3, QuadratureSpec{7, 5, 1});
  for (int threads : {2, 3, 8, 200}) CHECK(integrate_unit_cube(f, 3, QuadratureSpec{7, 5, threads}) == one);
}

TEST_CASE("compensated summation") {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 10; ++i) s.add(1e-16);
  s.add(-1.0);
  CHECK(s.value() == doctest::Approx(1e-15).epsilon(1e-12));
}

TEST_CASE("chart maps validate their variables") {
  CHECK_THROWS_AS(chart(2, {"x1", "x3"}), std::invalid_argument);
  CHECK_THROWS_AS(chart(2, {"x1"}), std::invalid_argument);
  CHECK_THROWS_AS(chart(2, {"x1", "y1"}), std::invalid_argument);
  const ChartMap id = ChartMap::identity(3);
  CHECK(id.ambient_dimension() == 3);
  CHECK(id.partial(1, 1).is_constant(1.0));
  CHECK(id.partial(1, 2).is_constant(0.0));
}

TEST_CASE("Jacobian through the cube") {
  const NormalSet box = make_set({{"0", "1"}, {"0", "1"}});
  const Matrix i = chart_jacobian_through_cube(ChartMap::identity(2), box, v({0.3, 0.6}));
  CHECK(i.isApprox(Matrix::Identity(2, 2)));

  const NormalSet tri = make_set({{"0", "1"}, {"0", "x1"}});
  const Matrix t = chart_jacobian_through_cube(ChartMap::identity(2), tri, v({0.3, 0.6}));
  CHECK(t(0, 0) == 1.0);
  CHECK(t(0, 1) == 0.0);
  CHECK(t(1, 0) == doctest::Approx(0.6));
  CHECK(t(1, 1) == doctest::Approx(0.3));

  const NormalSet interval = make_set({{"0", "2*pi"}});
  const Matrix c = chart_jacobian_through_cube(chart(1, {"cos(x1)", "sin(x1)"}), interval, v({0.2}));
  const double s = 2 * std::numbers::pi * 0.2;
  CHECK(c.rows() == 2);
  CHECK(c(0, 0) == doctest::Approx(-2 * std::numbers::pi * std::sin(s)));
  CHECK(c(1, 0) == doctest::Approx(2 * std::numbers::pi * std::cos(s)));
}

TEST_CASE("Jacobian through the cube matches finite differences of Phi o c") {
  const NormalSet set = make_set({{"0", "1"}, {"x1^2", "1 + x1"}, {"-x2", "x1*x2 + 1"}});
  const ChartMap phi = chart(3, {"x1*x2 + x3", "sin(x2)*x3", "x1 - x3^2", "exp(x1*x3)"});
  const std::vector<double> t{0.3, 0.7, 0.4};
  const Matrix d = chart_jacobian_through_cube(phi, set, t);
  for (int j = 0; j < 3; ++j) {
    auto plus = t;
    auto minus = t;
    plus[static_cast<std::size_t>(j)] += 1e-6;
    minus[static_cast<std::size_t>(j)] -= 1e-6;
    const Vec fd = (phi(as_span(cube_param(set, plus))) - phi(as_span(cube_param(set, minus)))) / 2e-6;
    for (int i = 0; i < 4; ++i) CHECK(d(i, j) == doctest::Approx(fd[i]).epsilon(1e-6));
  }
}

TEST_CASE("pullback integrand examples") {
  const DifferentialForm volume(2, 2, {{{1, 2}, parse("1")}});
  const NormalSet box = make_set({{"0", "1"}, {"0", "1"}});
  const NormalSet tri = make_set({{"0", "1"}, {"0", "x1"}});
  CHECK(pullback_integrand(volume, ChartMap::identity(2), box, v({0.2, 0.9})) == 1.0);
  CHECK(pullback_integrand(volume, ChartMap::identity(2), tri, v({0.2, 0.9})) == doctest::Approx(0.2));
  CHECK(pullback_integrand(volume, chart(2, {"x1 + x2", "x1 + x2"}), box, v({0.2, 0.9})) == 0.0);
  const DifferentialForm three(3, 3, {{{1, 2, 3}, parse("1")}});
  const NormalSet cube = make_set({{"0", "1"}, {"0", "1"}, {"0", "1"}});
  CHECK(pullback_integrand(three, ChartMap::identity(3), cube, v({0.1, 0.5, 0.8})) == 1.0);
  CHECK_THROWS_AS(pullback_integrand(DifferentialForm(1, 2), ChartMap::identity(2), box, v({0.5, 0.5})),
                  std::invalid_argument);
}

TEST_CASE("pullback is linear in each selected row") {
  const NormalSet tri = make_set({{"0", "1"}, {"0", "x1"}});
  const DifferentialForm a(2, 3, {{{1, 2}, parse("y3 + 2")}});
  const DifferentialForm b(2, 3, {{{1, 3}, parse("y2")}});
  const DifferentialForm both = add(a, b);
  const std::vector<double> t{0.4, 0.7};
  const double s = 3.5;
  const ChartMap phi = chart(2, {"x1 + x2^2", "sin(x1*x2)", "x1*x2"});
  const ChartMap scaled = chart(2, {"x1 + x2^2", "sin(x1*x2)", "3.5*(x1*x2)"});
  // Constant coefficients isolate the minors.
  const DifferentialForm b1(2, 3, {{{1, 3}, parse("1")}});
  CHECK(pullback_integrand(b1, scaled, tri, t) == doctest::Approx(s * pullback_integrand(b1, phi, tri, t)));
  const DifferentialForm a1(2, 3, {{{1, 2}, parse("1")}});
  CHECK(pullback_integrand(a1, scaled, tri, t) == doctest::Approx(pullback_integrand(a1, phi, tri, t)));
  CHECK(pullback_integrand(both, phi, tri, t) ==
        doctest::Approx(pullback_integrand(a, phi, tri, t) + pullback_integrand(b, phi, tri, t)));
}

TEST_CASE("pullback through an identity reparametrization is unchanged") {
  const NormalSet set = make_set({{"0", "1"}, {"x1^2", "1 + x1"}});
  const ChartMap phi = chart(2, {"x1*x2", "x2 - x1^3"});
  const CompiledForm w(DifferentialForm(1, 2, {{{1}, parse("y2")}, {{2}, parse("y1^2")}}));
  const std::vector<double> t{0.3, 0.8};
  for (int omit : {0, 1})
    CHECK(pullback_value_reparametrized(w, phi, set, ChartMap::identity(2), t, omit) ==
          doctest::Approx(pullback_value(w, phi, set, t, omit)).epsilon(1e-15));
}

TEST_CASE("det B residual") {
  const NormalSet box = make_set({{"0", "1"}, {"0", "1"}});
  const std::vector<double> t{0.4, 0.6};
  CHECK(det_B_residual(ChartMap::identity(2), box, MultiIndex({1}, 2), t, 1e-3) <= 1e-12);

  // Nonlinear polynomial chart on the triangle: second-order decay.
  const NormalSet tri = make_set({{"0", "1"}, {"0", "x1"}});
  const ChartMap phi = chart(2, {"x1^3 + x2", "x1*x2^2"});
  for (int row : {1, 2}) {
    const double coarse = det_B_residual(phi, tri, MultiIndex({row}, 2), t, 1e-2);
    const double fine = det_B_residual(phi, tri, MultiIndex({row}, 2), t, 5e-3);
    if (coarse < 1e-12) continue;
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));
  }
  CHECK_THROWS_AS(det_B_residual(phi, tri, MultiIndex({1}, 2), v({0.0005, 0.5}), 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(det_B_residual(phi, tri, MultiIndex({1, 2}, 2), t, 1e-3), std::invalid_argument);
}
