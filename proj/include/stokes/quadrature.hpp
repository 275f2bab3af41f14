#pragma once

// Composite tensor-product Gauss-Legendre cubature on [0,1]^d with a
// deterministic, partition-independent reduction.

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace stokes {

/// points: Gauss nodes per axis (q); cells: composite subdivisions per axis
/// (m); threads: worker count, 0 = hardware concurrency. The thread count
/// never changes the result.
struct QuadratureSpec {
  int points = 12;
  int cells = 4;
  int threads = 0;

  friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

/// Throws std::invalid_argument unless points, cells >= 1 and threads >= 0.
void validate(const QuadratureSpec& spec);

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nodes and weights of the q-point Gauss-Legendre rule on [0,1], nodes
/// ascending. Weights sum to 1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_legendre(int points);

/// Neumaier's compensated summation.
class CompensatedSum {
 public:
  void add(double v) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

using Integrand = std::function<double(std::span<const double>)>;

/// Integral of f over [0,1]^d. Each cell is summed on its own (nodes in
/// lexicographic order, compensated), then the cell sums are reduced in
/// lexicographic cell order. For d = 0 the result is f evaluated at the empty
/// point. A non-finite integrand value raises QuadratureError naming the node;
/// exceptions thrown by f propagate (the lexicographically first one wins).
double integrate_unit_cube(const Integrand& f, int d, const QuadratureSpec& spec);

/// Worker count actually used for `spec`.
int resolve_threads(const QuadratureSpec& spec);

}  // namespace stokes
