#pragma once

// Normal and regular sets, the cube parametrization c : [0,1]^k -> A and its
// lower-triangular Jacobian, face maps, membership and the epsilon-shrink.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stokes/expr.hpp"
#include "stokes/linalg.hpp"

namespace stokes {

/// Raised when a bound references a coordinate it may not depend on.
class ScopeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// f_i(x1..x_{i-1}) <= x_i <= g_i(x1..x_{i-1}).
struct Bound {
  Expression lower;
  Expression upper;
};

enum class Side : std::uint8_t { Bottom, Top };

/// Face of the parameter cube: t_axis frozen at 0 (Bottom) or 1 (Top).
/// `axis` is 0-based.
struct Face {
  int axis = 0;
  Side side = Side::Bottom;

  friend bool operator==(const Face&, const Face&) = default;
};

std::string to_string(const Face& face);

/// Region given by a chain of bounds in the fixed axis order x1, x2, ...
/// The first pair must be constant. Users must pre-order the axes so that
/// each bound only depends on earlier coordinates.
class NormalSet {
 public:
  explicit NormalSet(std::vector<Bound> bounds);

  int dimension() const noexcept { return static_cast<int>(bounds_.size()); }
  const std::vector<Bound>& bounds() const noexcept { return bounds_; }

  // Compiled accessors over x = (x1..xk); only x1..x_{axis} are read.
  double lower(int axis, std::span<const double> x) const { return compiled_[axis].lower(x); }
  double upper(int axis, std::span<const double> x) const { return compiled_[axis].upper(x); }
  /// d lower_axis / d x_var for var < axis.
  double lower_partial(int axis, int var, std::span<const double> x) const {
    return compiled_[axis].lower_partials[var](x);
  }
  double upper_partial(int axis, int var, std::span<const double> x) const {
    return compiled_[axis].upper_partials[var](x);
  }

 private:
  struct CompiledBound {
    CompiledExpression lower;
    CompiledExpression upper;
    std::vector<CompiledExpression> lower_partials;
    std::vector<CompiledExpression> upper_partials;
  };

  std::vector<Bound> bounds_;
  std::vector<CompiledBound> compiled_;
};

/// Finite union of normal sets of equal dimension with (assumed) disjoint
/// interiors.
class RegularSet {
 public:
  explicit RegularSet(std::vector<NormalSet> pieces);
  RegularSet(NormalSet piece);  // NOLINT: a normal set is a one-piece regular set

  int dimension() const noexcept { return pieces_.front().dimension(); }
  const std::vector<NormalSet>& pieces() const noexcept { return pieces_; }

 private:
  std::vector<NormalSet> pieces_;
};

/// Value and partial Jacobian of c at a parameter point.
///
/// dc is lower triangular; only the columns requested from
/// evaluate_cube_map are filled (others are left zero). Whenever a factor is
/// exactly zero its cofactor is not evaluated, so collapsed directions never
/// touch the (possibly singular) bound derivatives behind them.
struct CubeJet {
  Vec x;
  Vec diagonal;  // (g_j - f_j)(x_1..x_{j-1})
  Matrix dc;
  /// Set when a requested column has a zero diagonal entry; that column is
  /// then identically zero.
  bool degenerate = false;
};

inline constexpr std::uint32_t kAllColumns = 0xffffffffu;

/// Fills `jet`. With `stop_on_degenerate`, returns as soon as a requested
/// column is found to be zero, leaving dc unfilled.
void evaluate_cube_map(const NormalSet& set, std::span<const double> t, std::uint32_t columns, bool stop_on_degenerate,
                       CubeJet& jet);

/// c(t): x_1 = (1-t_1) f_1 + t_1 g_1, x_j = (1-t_j) f_j(x_<j) + t_j g_j(x_<j).
Vec cube_param(const NormalSet& set, std::span<const double> t);

/// Dc/Dt (k x k, lower triangular, diagonal (g_j - f_j) o c).
Matrix cube_param_jacobian(const NormalSet& set, std::span<const double> t);

/// c(t) with t_axis fixed by the face and the other coordinates taken from s.
Vec face_param(const NormalSet& set, const Face& face, std::span<const double> s);

/// Inserts the face's frozen coordinate into s, giving a point of [0,1]^k.
Vec face_point(const Face& face, std::span<const double> s);

/// Closed inequalities of the bound chain, no tolerance.
bool contains(const NormalSet& set, std::span<const double> x);

/// Bounds replaced by f^e = min(f + e, g) and g^e = max(g - e, f^e).
NormalSet shrink(const NormalSet& set, double epsilon);

/// Unnormalized outward vector of a graph face at the point x on it:
/// (-g_{j|1}, .., 1, .., -g_{j|k}) on top faces, (f_{j|1}, .., -1, .., f_{j|k})
/// on bottom faces.
Vec outward_vector(const NormalSet& set, const Face& face, std::span<const double> x);

// Sampled heuristics. They check hypotheses that cannot be decided exactly;
// each returns human-readable findings (empty when nothing was found).

/// Points of a fixed interior lattice where g_j < f_j (beyond rounding).
std::vector<std::string> sample_bound_order(const NormalSet& set, int per_axis = 5);

/// Interior sample points of one piece that lie strictly inside another.
std::vector<std::string> sample_interior_overlap(const RegularSet& region, int per_axis = 4);

/// Bound derivatives whose sampled magnitude exceeds `limit`, suggesting
/// they are not bounded inside the domain.
std::vector<std::string> sample_bound_derivatives(const NormalSet& set, double limit = 1e8, int per_axis = 5);

/// Calls `visit` with every point of the lattice {(i + 1/2) / per_axis}^dim.
void for_each_lattice_point(int dimension, int per_axis, const std::function<void(std::span<const double>)>& visit);

}  // namespace stokes
