#pragma once

// Differential forms on R^n with coefficient expressions in y1..yn.
// Terms are always stored canonically: strictly increasing multi-indices,
// one term per multi-index, no literal-zero coefficients.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stokes/expr.hpp"

namespace stokes {

/// Strictly increasing 1-based coordinate indices i_1 < ... < i_p.
class MultiIndex {
 public:
  MultiIndex() = default;
  /// Throws std::invalid_argument unless `indices` is strictly increasing
  /// and within 1..n.
  MultiIndex(std::vector<int> indices, int n);

  std::size_t size() const noexcept { return indices_.size(); }
  const std::vector<int>& indices() const noexcept { return indices_; }
  int operator[](std::size_t i) const { return indices_[i]; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> indices_;
};

struct FormTerm {
  MultiIndex index;
  Expression coeff;
};

/// b dy_{i_1} ^ ... ^ dy_{i_p} for arbitrary (unsorted) indices. A repeated
/// index gives nullopt (the wedge vanishes); otherwise the indices are sorted
/// and the coefficient carries the permutation sign.
std::optional<FormTerm> canonicalize(const std::vector<int>& indices, const Expression& coeff, int n);

/// Sign of the permutation sorting `indices` (0 if an index repeats).
int permutation_sign(const std::vector<int>& indices);

class DifferentialForm {
 public:
  /// Zero form of the given degree on R^n. Throws if degree > n.
  DifferentialForm(int degree, int n);
  /// Terms in any index order; like indices are merged. Throws if the
  /// degree exceeds n, a term has the wrong length, an index is out of
  /// range, or a coefficient references a name outside y1..yn.
  DifferentialForm(int degree, int n, const std::vector<std::pair<std::vector<int>, Expression>>& terms);

  int degree() const noexcept { return degree_; }
  int ambient_dimension() const noexcept { return n_; }
  const std::vector<FormTerm>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Adds coeff * dy_I after canonicalization, merging with an existing term.
  void accumulate(const std::vector<int>& indices, const Expression& coeff);

 private:
  int degree_;
  int n_;
  std::vector<FormTerm> terms_;  // sorted by index
};

/// d omega: for every term and every i, d b / d y_i  dy_i ^ dy_I.
DifferentialForm exterior_derivative(const DifferentialForm& form);

/// Termwise sum. Throws std::invalid_argument on degree or dimension mismatch.
DifferentialForm add(const DifferentialForm& a, const DifferentialForm& b);

DifferentialForm scale(const DifferentialForm& form, const Expression& factor);

/// d(d omega) evaluated at one point y of R^n. `violation` is the largest
/// coefficient magnitude, `scale` the largest second partial of any
/// coefficient of omega there; d o d = 0 means violation is rounding-sized
/// relative to 1 + scale. A form whose second derivative would exceed degree
/// n gives zeros.
struct DdZeroSample {
  double violation = 0.0;
  double scale = 0.0;
};

class DdZeroProbe {
 public:
  explicit DdZeroProbe(const DifferentialForm& form);
  DdZeroSample operator()(std::span<const double> y) const;
  /// Number of terms of d(d omega) left after constant folding.
  std::size_t term_count() const noexcept { return dd_.size(); }

 private:
  std::vector<CompiledExpression> dd_;
  std::vector<CompiledExpression> second_partials_;
};

}  // namespace stokes
