#include "stokes/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

namespace stokes {

void validate(const QuadratureSpec& spec) {
  if (spec.points < 1) throw std::invalid_argument("quadrature points must be >= 1");
  if (spec.cells < 1) throw std::invalid_argument("quadrature cells must be >= 1");
  if (spec.threads < 0) throw std::invalid_argument("thread count must be >= 0");
}

namespace {

// Newton iteration on P_q from the usual cosine initial guess, then mapped
// from [-1,1] to [0,1].
GaussRule compute_rule(int q) {
  auto legendre = [q](double x, double& derivative) {
    double p0 = 1.0;
    double p1 = x;
    for (int n = 2; n <= q; ++n) {
      const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
      p0 = p1;
      p1 = p2;
    }
    derivative = q * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(q));
  rule.weights.resize(static_cast<std::size_t>(q));
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(q - 1 - i);
    rule.nodes[lo] = 0.5 * (1.0 - x);
    rule.nodes[hi] = 0.5 * (1.0 + x);
    rule.weights[lo] = 0.5 * w;
    rule.weights[hi] = 0.5 * w;
  }
  if (q % 2 == 1) rule.nodes[static_cast<std::size_t>(q / 2)] = 0.5;
  return rule;
}

std::string describe_node(std::span<const double> t) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < t.size(); ++i) os << (i ? ", " : "") << t[i];
  os << ')';
  return os.str();
}

}  // namespace

const GaussRule& gauss_legendre(int points) {
  if (points < 1) throw std::invalid_argument("Gauss rule needs at least one point");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[points];
  if (!slot) slot = std::make_unique<GaussRule>(compute_rule(points));
  return *slot;
}

void CompensatedSum::add(double v) noexcept {
  const double t = sum_ + v;
  if (std::fabs(sum_) >= std::fabs(v))
    compensation_ += (sum_ - t) + v;
  else
    compensation_ += (v - t) + sum_;
  sum_ = t;
}

int resolve_threads(const QuadratureSpec& spec) {
  if (spec.threads > 0) return spec.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

double integrate_unit_cube(const Integrand& f, int d, const QuadratureSpec& spec) {
  validate(spec);
  if (d < 0) throw std::invalid_argument("integration dimension must be >= 0");
  if (d == 0) {
    const double v = f({});
    if (!std::isfinite(v)) throw QuadratureError("integrand is not finite at the point ()");
    return v;
  }
  const GaussRule& rule = gauss_legendre(spec.points);
  const int q = spec.points;
  const int m = spec.cells;
  long long cell_count = 1;
  for (int i = 0; i < d; ++i) cell_count *= m;
  const double h = 1.0 / m;

  std::vector<double> cell_sums(static_cast<std::size_t>(cell_count), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cell_count));

  auto run_cell = [&](long long cell) {
    std::vector<int> origin(static_cast<std::size_t>(d));
    long long rest = cell;
    for (int i = d - 1; i >= 0; --i) {
      origin[static_cast<std::size_t>(i)] = static_cast<int>(rest % m);
      rest /= m;
    }
    std::vector<int> node(static_cast<std::size_t>(d), 0);
    std::vector<double> t(static_cast<std::size_t>(d));
    CompensatedSum sum;
    for (;;) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        const auto a = static_cast<std::size_t>(i);
        t[a] = (origin[a] + rule.nodes[static_cast<std::size_t>(node[a])]) * h;
        w *= rule.weights[static_cast<std::size_t>(node[a])] * h;
      }
      const double v = f(t);
      if (!std::isfinite(v)) throw QuadratureError("integrand is not finite at the node t = " + describe_node(t));
      sum.add(w * v);
      int axis = d - 1;
      while (axis >= 0 && ++node[static_cast<std::size_t>(axis)] == q) node[static_cast<std::size_t>(axis--)] = 0;
      if (axis < 0) break;
    }
    cell_sums[static_cast<std::size_t>(cell)] = sum.value();
  };

  auto run_range = [&](long long begin, long long end) {
    for (long long cell = begin; cell < end; ++cell) {
      try {
        run_cell(cell);
      } catch (...) {
        errors[static_cast<std::size_t>(cell)] = std::current_exception();
        return;
      }
    }
  };

  const long long workers = std::min<long long>(resolve_threads(spec), cell_count);
  if (workers <= 1) {
    run_range(0, cell_count);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long long w = 0; w < workers; ++w) {
      const long long begin = cell_count * w / workers;
      const long long end = cell_count * (w + 1) / workers;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  CompensatedSum total;
  for (double s : cell_sums) total.add(s);
  return total.value();
}

}  // namespace stokes
