#pragma once

// Both sides of the Stokes identity for a scenario, the face-integral W
// cross-check, reparametrization and integration-by-parts residuals, and
// convergence studies.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stokes/chart.hpp"
#include "stokes/forms.hpp"
#include "stokes/geometry.hpp"
#include "stokes/quadrature.hpp"

namespace stokes {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultTolerance = 1e-6;

/// Descriptive fields carried along with a scenario. `exact` is the closed
/// form of both sides when known; `smoothness` labels the regularity class
/// of the data ("C-infinity", "sqrt-singular", ...).
struct ScenarioInfo {
  std::string name;
  std::string description;
  std::optional<double> exact;
  std::string smoothness;
};

class Scenario {
 public:
  /// Throws ScenarioError when the chart domain differs from the region
  /// dimension, the form lives on another R^n, its degree is not k-1, the
  /// tolerance is not positive or the quadrature spec is invalid.
  Scenario(RegularSet region, ChartMap chart, DifferentialForm form, QuadratureSpec quadrature = {},
           double tolerance = kDefaultTolerance, ScenarioInfo info = {});

  const RegularSet& region() const noexcept { return region_; }
  const ChartMap& chart() const noexcept { return *chart_; }
  const DifferentialForm& form() const noexcept { return form_; }
  /// d omega, computed once.
  const DifferentialForm& derivative() const noexcept { return *derivative_; }
  const CompiledForm& compiled_form() const noexcept { return *compiled_form_; }
  const CompiledForm& compiled_derivative() const noexcept { return *compiled_derivative_; }
  const QuadratureSpec& quadrature() const noexcept { return quadrature_; }
  double tolerance() const noexcept { return tolerance_; }
  const ScenarioInfo& info() const noexcept { return info_; }
  int k() const noexcept { return region_.dimension(); }
  int n() const noexcept { return chart_->ambient_dimension(); }

  /// Findings of the sampled hypothesis checks (bound order, overlapping
  /// pieces, seemingly unbounded bound derivatives).
  std::vector<std::string> sampled_warnings() const;

  Scenario with_quadrature(const QuadratureSpec& spec) const;
  Scenario with_tolerance(double tolerance) const;

 private:
  RegularSet region_;
  std::shared_ptr<const ChartMap> chart_;
  DifferentialForm form_;
  std::shared_ptr<const DifferentialForm> derivative_;
  std::shared_ptr<const CompiledForm> compiled_form_;
  std::shared_ptr<const CompiledForm> compiled_derivative_;
  QuadratureSpec quadrature_;
  double tolerance_;
  ScenarioInfo info_;
};

/// Signed contribution of one face to the boundary side:
/// (-1)^(j-1) * (+integral on top, -integral on bottom).
struct FaceContribution {
  std::size_t piece = 0;
  Face face;
  double value = 0.0;
};

struct PieceContribution {
  std::size_t piece = 0;
  double volume = 0.0;
  double boundary = 0.0;
};

struct BoundarySide {
  double total = 0.0;
  std::vector<FaceContribution> faces;
};

struct VerificationReport {
  std::string scenario;
  QuadratureSpec quadrature;
  double tolerance = kDefaultTolerance;
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<PieceContribution> pieces;
  std::vector<FaceContribution> faces;
  double absolute_residual = 0.0;
  double relative_residual = 0.0;
  std::optional<double> exact;
  bool pass = false;
  std::vector<std::string> warnings;
  /// Set when the computation failed; the numeric fields are then meaningless.
  std::optional<std::string> error;
};

/// |lhs - rhs| / (1 + max(|lhs|, |rhs|)).
double relative_residual(double lhs, double rhs);

/// Integral of d omega over S: sum over pieces of the cube integral of the
/// pulled-back derivative.
double volume_integral(const Scenario& s);
double volume_integral(const Scenario& s, std::size_t piece);

/// Integral of omega over the boundary, face by face in cube coordinates.
BoundarySide boundary_integral(const Scenario& s);
BoundarySide boundary_integral(const Scenario& s, std::size_t piece);

/// Integral over one face of sum_I b_I(Phi(z)) det[N(z); DPhi_I(z)] times the
/// face's parameter Jacobian, with N the unnormalized outward vector. Equals
/// the signed face contribution of boundary_integral. Requires k >= 2.
double face_integral_W(const Scenario& s, std::size_t piece, const Face& face);

/// Runs both sides. Never throws: failures land in report.error.
VerificationReport verify(const Scenario& s);

/// max of |volume - volume via rho| and |boundary - boundary via rho|, where
/// the second computation uses the parametrization Phi o c o rho for every
/// piece. Throws std::invalid_argument when rho is not a map R^k -> R^k, or
/// when sampled points show det rho' <= 0 or rho leaving the cube.
double reparam_residual(const Scenario& s, const ChartMap& rho);

/// The three terms of integration by parts and the residual
/// |int f'g - [fg] + int fg'|.
struct IbpResult {
  double derivative_term = 0.0;  // int f' g
  double boundary_term = 0.0;    // [f g]
  double parts_term = 0.0;       // int f g'
  double residual = 0.0;
};

/// One-dimensional variant on [a, b]; f and g are expressions in x1.
IbpResult ibp_residual(const Expression& f, const Expression& g, double a, double b, const QuadratureSpec& quad);

/// Box variant: f, g in x1..xk on the box prod [lower_i, upper_i], parts taken
/// along `axis` (0-based). The boundary term integrates [fg] over the other
/// axes.
IbpResult ibp_residual(const Expression& f, const Expression& g, const std::vector<double>& lower,
                       const std::vector<double>& upper, int axis, const QuadratureSpec& quad);

struct ConvergenceLevel {
  QuadratureSpec quadrature;
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_residual = 0.0;
  /// Tracked quantity: max relative deviation of lhs, rhs from the exact
  /// value when one is known, else the relative residual.
  double error = 0.0;
  /// log(e_prev / e) / log(m / m_prev); empty on the first level and when
  /// m did not change.
  std::optional<double> order;
};

struct ConvergenceTable {
  std::string scenario;
  bool tracks_exact = false;
  std::vector<ConvergenceLevel> levels;
};

/// Throws std::invalid_argument with fewer than three levels.
ConvergenceTable convergence_study(const Scenario& s, const std::vector<QuadratureSpec>& levels);

}  // namespace stokes
