#pragma once

// Chart maps Phi : R^k -> R^n, the chain rule through the cube
// parametrization, and the pullback integrands of forms.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stokes/expr.hpp"
#include "stokes/forms.hpp"
#include "stokes/geometry.hpp"
#include "stokes/linalg.hpp"

namespace stokes {

class ChartMap {
 public:
  /// Components are expressions in x1..xk. Throws std::invalid_argument when
  /// n < k, n exceeds kMaxDim, or a component references another name.
  ChartMap(int k, std::vector<Expression> components);

  static ChartMap identity(int k);

  int domain_dimension() const noexcept { return k_; }
  int ambient_dimension() const noexcept { return static_cast<int>(components_.size()); }
  const std::vector<Expression>& components() const noexcept { return components_; }
  /// d Phi_i / d x_j, symbolic.
  const Expression& partial(int i, int j) const { return partials_[static_cast<std::size_t>(i * k_ + j)]; }

  double value(int i, std::span<const double> x) const { return compiled_[static_cast<std::size_t>(i)](x); }
  double partial_value(int i, int j, std::span<const double> x) const {
    return compiled_partials_[static_cast<std::size_t>(i * k_ + j)](x);
  }
  Vec operator()(std::span<const double> x) const;
  /// DPhi(x), n x k.
  Matrix jacobian(std::span<const double> x) const;

 private:
  int k_;
  std::vector<Expression> components_;
  std::vector<Expression> partials_;
  std::vector<CompiledExpression> compiled_;
  std::vector<CompiledExpression> compiled_partials_;
};

/// A form with coefficients compiled over y1..yn and 0-based index rows.
class CompiledForm {
 public:
  explicit CompiledForm(const DifferentialForm& form);

  struct Term {
    std::vector<int> rows;
    CompiledExpression coeff;
  };

  int degree() const noexcept { return degree_; }
  int ambient_dimension() const noexcept { return n_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  /// Bit r set when some term selects row r.
  std::uint32_t used_rows() const noexcept { return used_rows_; }

 private:
  int degree_;
  int n_;
  std::vector<Term> terms_;
  std::uint32_t used_rows_ = 0;
};

/// D(Phi o c)/Dt at t (n x k).
Matrix chart_jacobian_through_cube(const ChartMap& chart, const NormalSet& set, std::span<const double> t);

/// Sum over terms of b_I(Phi(c(t))) det(rows I of D(Phi o c)/Dt, columns
/// except `omit_column`). With omit_column = -1 all k columns are used, so the
/// form must have degree k; otherwise degree k-1.
///
/// Exact zeros short-circuit: a requested column of Dc with zero diagonal
/// makes the value 0 without evaluating anything behind it, and a term whose
/// minor is exactly 0 never evaluates its coefficient. This keeps collapsed
/// faces (where bound derivatives may be singular) finite.
double pullback_value(const CompiledForm& form, const ChartMap& chart, const NormalSet& set, std::span<const double> t,
                      int omit_column = -1);

/// Same with the parameter point first sent through rho : [0,1]^k -> [0,1]^k,
/// i.e. the pullback through Phi o c o rho with Jacobian
/// D(Phi o c)(rho(t)) * Drho(t).
double pullback_value_reparametrized(const CompiledForm& form, const ChartMap& chart, const NormalSet& set,
                                     const ChartMap& rho, std::span<const double> t, int omit_column = -1);

/// pullback_value for an uncompiled degree-k form.
double pullback_integrand(const DifferentialForm& form, const ChartMap& chart, const NormalSet& set,
                          std::span<const double> t);

/// Sum_j (-1)^(j-1) of the centered difference in t_j (step h) of
/// det(rows I of D(Phi o c)/Dt, all columns but j); absolute value. This is
/// the det B quantity, zero for C^2 data up to O(h^2).
/// Throws std::invalid_argument unless |I| = k-1 and t +- h stays inside
/// the open cube.
double det_B_residual(const ChartMap& chart, const NormalSet& set, const MultiIndex& index, std::span<const double> t,
                      double h);

}  // namespace stokes
