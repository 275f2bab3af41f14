#include "stokes/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stokes {

Scenario::Scenario(RegularSet region, ChartMap chart, DifferentialForm form, QuadratureSpec quadrature,
                   double tolerance, ScenarioInfo info)
    : region_(std::move(region)),
      chart_(std::make_shared<const ChartMap>(std::move(chart))),
      form_(std::move(form)),
      quadrature_(quadrature),
      tolerance_(tolerance),
      info_(std::move(info)) {
  const int k = region_.dimension();
  if (chart_->domain_dimension() != k)
    throw ScenarioError("chart domain dimension " + std::to_string(chart_->domain_dimension()) +
                        " differs from the region dimension k = " + std::to_string(k));
  if (form_.ambient_dimension() != chart_->ambient_dimension())
    throw ScenarioError("form lives on R^" + std::to_string(form_.ambient_dimension()) + " but the chart maps into R^" +
                        std::to_string(chart_->ambient_dimension()));
  if (form_.degree() != k - 1)
    throw ScenarioError("form degree is " + std::to_string(form_.degree()) + "; a region of dimension k = " +
                        std::to_string(k) + " needs degree " + std::to_string(k - 1));
  if (!(tolerance_ > 0.0) || !std::isfinite(tolerance_)) throw ScenarioError("tolerance must be a positive number");
  try {
    validate(quadrature_);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  derivative_ = std::make_shared<const DifferentialForm>(exterior_derivative(form_));
  compiled_form_ = std::make_shared<const CompiledForm>(form_);
  compiled_derivative_ = std::make_shared<const CompiledForm>(*derivative_);
}

std::vector<std::string> Scenario::sampled_warnings() const {
  std::vector<std::string> out;
  const auto& pieces = region_.pieces();
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const std::string prefix = pieces.size() > 1 ? "piece " + std::to_string(p) + ": " : "";
    for (auto& w : sample_bound_order(pieces[p])) out.push_back(prefix + w);
    for (auto& w : sample_bound_derivatives(pieces[p])) out.push_back(prefix + w);
  }
  if (pieces.size() > 1)
    for (auto& w : sample_interior_overlap(region_)) out.push_back(w);
  return out;
}

Scenario Scenario::with_quadrature(const QuadratureSpec& spec) const {
  Scenario copy = *this;
  validate(spec);
  copy.quadrature_ = spec;
  return copy;
}

Scenario Scenario::with_tolerance(double tolerance) const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw ScenarioError("tolerance must be a positive number");
  Scenario copy = *this;
  copy.tolerance_ = tolerance;
  return copy;
}

double relative_residual(double lhs, double rhs) {
  return std::fabs(lhs - rhs) / (1.0 + std::max(std::fabs(lhs), std::fabs(rhs)));
}

namespace {

// Re-raises the current integration failure with a location prefix, keeping
// the error category.
[[noreturn]] void rethrow_with(const std::string& where) {
  try {
    throw;
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  } catch (const UnboundVariableError& e) {
    throw UnboundVariableError(where + ": " + e.what());
  } catch (const EvaluationError& e) {
    throw EvaluationError(where + ": " + e.what());
  } catch (const QuadratureError& e) {
    throw QuadratureError(where + ": " + e.what());
  }
}

void check_piece(const Scenario& s, std::size_t piece) {
  if (piece >= s.region().pieces().size()) throw std::out_of_range("piece index out of range");
}

std::string face_label(std::size_t piece, const Face& face) {
  return "piece " + std::to_string(piece) + ", face " + to_string(face);
}

// Integral of the pulled-back omega over one face (unsigned).
double face_value(const Scenario& s, std::size_t piece, const Face& face) {
  const NormalSet& set = s.region().pieces()[piece];
  const double frozen = face.side == Side::Top ? 1.0 : 0.0;
  auto integrand = [&](std::span<const double> r) {
    double t[kMaxDim];
    for (int i = 0, src = 0; i < set.dimension(); ++i) t[i] = i == face.axis ? frozen : r[src++];
    return pullback_value(s.compiled_form(), s.chart(), set,
                          std::span<const double>(t, static_cast<std::size_t>(set.dimension())), face.axis);
  };
  try {
    return integrate_unit_cube(integrand, set.dimension() - 1, s.quadrature());
  } catch (const EvaluationError&) {
    rethrow_with(face_label(piece, face));
  } catch (const QuadratureError&) {
    rethrow_with(face_label(piece, face));
  }
}

double signed_face(const Face& face, double value) {
  const double orientation = face.axis % 2 == 0 ? 1.0 : -1.0;
  return face.side == Side::Top ? orientation * value : -orientation * value;
}

}  // namespace

double volume_integral(const Scenario& s, std::size_t piece) {
  check_piece(s, piece);
  const NormalSet& set = s.region().pieces()[piece];
  if (s.derivative().is_zero()) return 0.0;
  auto integrand = [&](std::span<const double> t) {
    return pullback_value(s.compiled_derivative(), s.chart(), set, t, -1);
  };
  try {
    return integrate_unit_cube(integrand, set.dimension(), s.quadrature());
  } catch (const EvaluationError&) {
    rethrow_with("piece " + std::to_string(piece) + ", volume");
  } catch (const QuadratureError&) {
    rethrow_with("piece " + std::to_string(piece) + ", volume");
  }
}

double volume_integral(const Scenario& s) {
  CompensatedSum sum;
  for (std::size_t p = 0; p < s.region().pieces().size(); ++p) sum.add(volume_integral(s, p));
  return sum.value();
}

BoundarySide boundary_integral(const Scenario& s, std::size_t piece) {
  check_piece(s, piece);
  BoundarySide out;
  CompensatedSum sum;
  for (int j = 0; j < s.k(); ++j) {
    for (Side side : {Side::Top, Side::Bottom}) {
      const Face face{j, side};
      const double v = signed_face(face, face_value(s, piece, face));
      out.faces.push_back({piece, face, v});
      sum.add(v);
    }
  }
  out.total = sum.value();
  return out;
}

BoundarySide boundary_integral(const Scenario& s) {
  BoundarySide out;
  CompensatedSum sum;
  for (std::size_t p = 0; p < s.region().pieces().size(); ++p) {
    BoundarySide part = boundary_integral(s, p);
    for (const auto& f : part.faces) {
      out.faces.push_back(f);
      sum.add(f.value);
    }
  }
  out.total = sum.value();
  return out;
}

double face_integral_W(const Scenario& s, std::size_t piece, const Face& face) {
  check_piece(s, piece);
  const int k = s.k();
  if (k < 2) throw std::invalid_argument("face_integral_W needs k >= 2");
  if (face.axis < 0 || face.axis >= k) throw std::invalid_argument("face axis out of range");
  const NormalSet& set = s.region().pieces()[piece];
  const ChartMap& chart = s.chart();
  const CompiledForm& form = s.compiled_form();
  const double frozen = face.side == Side::Top ? 1.0 : 0.0;
  auto integrand = [&](std::span<const double> r) {
    double t[kMaxDim];
    for (int i = 0, src = 0; i < k; ++i) t[i] = i == face.axis ? frozen : r[src++];
    CubeJet jet;
    evaluate_cube_map(set, std::span<const double>(t, static_cast<std::size_t>(k)), 0u, false, jet);
    double measure = 1.0;
    for (int m = 0; m < k; ++m)
      if (m != face.axis) measure *= jet.diagonal[m];
    if (measure == 0.0) return 0.0;
    const auto x = as_span(jet.x);
    const Vec normal = outward_vector(set, face, x);
    const Vec y = chart(x);
    const Matrix dphi = chart.jacobian(x);
    double sum = 0.0;
    for (const auto& term : form.terms()) {
      Matrix w(k, k);
      w.row(0) = normal.transpose();
      for (int a = 0; a < k - 1; ++a) w.row(a + 1) = dphi.row(term.rows[static_cast<std::size_t>(a)]);
      const double det = w.determinant();
      if (det == 0.0) continue;
      sum += term.coeff(as_span(y)) * det;
    }
    return sum * measure;
  };
  try {
    return integrate_unit_cube(integrand, k - 1, s.quadrature());
  } catch (const EvaluationError&) {
    rethrow_with(face_label(piece, face) + " (W)");
  } catch (const QuadratureError&) {
    rethrow_with(face_label(piece, face) + " (W)");
  }
}

VerificationReport verify(const Scenario& s) {
  VerificationReport report;
  report.scenario = s.info().name;
  report.quadrature = s.quadrature();
  report.tolerance = s.tolerance();
  report.exact = s.info().exact;
  try {
    report.warnings = s.sampled_warnings();
    CompensatedSum lhs;
    CompensatedSum rhs;
    for (std::size_t p = 0; p < s.region().pieces().size(); ++p) {
      PieceContribution piece{p, volume_integral(s, p), 0.0};
      BoundarySide side = boundary_integral(s, p);
      piece.boundary = side.total;
      lhs.add(piece.volume);
      for (const auto& f : side.faces) {
        report.faces.push_back(f);
        rhs.add(f.value);
      }
      report.pieces.push_back(piece);
    }
    report.lhs = lhs.value();
    report.rhs = rhs.value();
    report.absolute_residual = std::fabs(report.lhs - report.rhs);
    report.relative_residual = relative_residual(report.lhs, report.rhs);
    report.pass = report.relative_residual <= s.tolerance();
  } catch (const std::exception& e) {
    report.error = e.what();
    report.pass = false;
  }
  return report;
}

double reparam_residual(const Scenario& s, const ChartMap& rho) {
  const int k = s.k();
  if (rho.domain_dimension() != k || rho.ambient_dimension() != k)
    throw std::invalid_argument("reparametrization must map R^" + std::to_string(k) + " to R^" + std::to_string(k));
  for_each_lattice_point(k, 6, [&](std::span<const double> t) {
    const Vec u = rho(t);
    for (int i = 0; i < k; ++i)
      if (!(u[i] >= 0.0 && u[i] <= 1.0))
        throw std::invalid_argument("reparametrization leaves the unit cube at a sampled point");
    if (!(rho.jacobian(t).determinant() > 0.0))
      throw std::invalid_argument("reparametrization is not orientation preserving (det rho' <= 0 at a sampled point)");
  });

  CompensatedSum volume;
  CompensatedSum boundary;
  for (std::size_t p = 0; p < s.region().pieces().size(); ++p) {
    const NormalSet& set = s.region().pieces()[p];
    if (!s.derivative().is_zero()) {
      volume.add(integrate_unit_cube(
          [&](std::span<const double> t) {
            return pullback_value_reparametrized(s.compiled_derivative(), s.chart(), set, rho, t, -1);
          },
          k, s.quadrature()));
    }
    for (int j = 0; j < k; ++j) {
      for (Side side : {Side::Top, Side::Bottom}) {
        const Face face{j, side};
        const double frozen = side == Side::Top ? 1.0 : 0.0;
        const double v = integrate_unit_cube(
            [&](std::span<const double> r) {
              double t[kMaxDim];
              for (int i = 0, src = 0; i < k; ++i) t[i] = i == j ? frozen : r[src++];
              return pullback_value_reparametrized(s.compiled_form(), s.chart(), set, rho,
                                                   std::span<const double>(t, static_cast<std::size_t>(k)), j);
            },
            k - 1, s.quadrature());
        boundary.add(signed_face(face, v));
      }
    }
  }
  const double lhs = volume_integral(s);
  const double rhs = boundary_integral(s).total;
  return std::max(std::fabs(lhs - volume.value()), std::fabs(rhs - boundary.value()));
}

IbpResult ibp_residual(const Expression& f, const Expression& g, double a, double b, const QuadratureSpec& quad) {
  return ibp_residual(f, g, std::vector<double>{a}, std::vector<double>{b}, 0, quad);
}

IbpResult ibp_residual(const Expression& f, const Expression& g, const std::vector<double>& lower,
                       const std::vector<double>& upper, int axis, const QuadratureSpec& quad) {
  const int k = static_cast<int>(lower.size());
  if (k < 1 || upper.size() != lower.size()) throw std::invalid_argument("box bounds must have equal, positive length");
  if (k > kMaxDim) throw std::invalid_argument("box dimension exceeds " + std::to_string(kMaxDim));
  if (axis < 0 || axis >= k) throw std::invalid_argument("axis out of range");
  for (int i = 0; i < k; ++i)
    if (!(lower[static_cast<std::size_t>(i)] < upper[static_cast<std::size_t>(i)]))
      throw std::invalid_argument("box needs lower < upper on every axis");
  const auto slots = indexed_names('x', k);
  const std::string& var = slots[static_cast<std::size_t>(axis)];
  const CompiledExpression cf(f, slots);
  const CompiledExpression cg(g, slots);
  const CompiledExpression df(differentiate(f, var), slots);
  const CompiledExpression dg(differentiate(g, var), slots);

  double volume = 1.0;
  for (int i = 0; i < k; ++i) volume *= upper[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)];
  auto to_box = [&](std::span<const double> t, double* x) {
    for (int i = 0; i < k; ++i) {
      const auto a = static_cast<std::size_t>(i);
      x[i] = lower[a] + (upper[a] - lower[a]) * t[a];
    }
  };
  const auto span_of = [k](const double* x) { return std::span<const double>(x, static_cast<std::size_t>(k)); };

  IbpResult r;
  r.derivative_term = volume * integrate_unit_cube(
                                   [&](std::span<const double> t) {
                                     double x[kMaxDim];
                                     to_box(t, x);
                                     return df(span_of(x)) * cg(span_of(x));
                                   },
                                   k, quad);
  r.parts_term = volume * integrate_unit_cube(
                              [&](std::span<const double> t) {
                                double x[kMaxDim];
                                to_box(t, x);
                                return cf(span_of(x)) * dg(span_of(x));
                              },
                              k, quad);
  const auto ax = static_cast<std::size_t>(axis);
  const double face_measure = volume / (upper[ax] - lower[ax]);
  r.boundary_term = face_measure * integrate_unit_cube(
                                       [&](std::span<const double> s) {
                                         double t[kMaxDim];
                                         double x[kMaxDim];
                                         for (int i = 0, src = 0; i < k; ++i) t[i] = i == axis ? 0.0 : s[src++];
                                         to_box(std::span<const double>(t, static_cast<std::size_t>(k)), x);
                                         x[axis] = upper[ax];
                                         const double top = cf(span_of(x)) * cg(span_of(x));
                                         x[axis] = lower[ax];
                                         const double bottom = cf(span_of(x)) * cg(span_of(x));
                                         return top - bottom;
                                       },
                                       k - 1, quad);
  r.residual = std::fabs(r.derivative_term - r.boundary_term + r.parts_term);
  return r;
}

ConvergenceTable convergence_study(const Scenario& s, const std::vector<QuadratureSpec>& levels) {
  if (levels.size() < 3) throw std::invalid_argument("a convergence study needs at least three levels");
  ConvergenceTable table;
  table.scenario = s.info().name;
  table.tracks_exact = s.info().exact.has_value();
  for (const auto& spec : levels) {
    const Scenario level = s.with_quadrature(spec);
    ConvergenceLevel row;
    row.quadrature = spec;
    row.lhs = volume_integral(level);
    row.rhs = boundary_integral(level).total;
    row.relative_residual = relative_residual(row.lhs, row.rhs);
    if (table.tracks_exact) {
      const double exact = *s.info().exact;
      const double scale = exact != 0.0 ? std::fabs(exact) : 1.0;
      row.error = std::max(std::fabs(row.lhs - exact), std::fabs(row.rhs - exact)) / scale;
    } else {
      row.error = row.relative_residual;
    }
    if (!table.levels.empty()) {
      const ConvergenceLevel& prev = table.levels.back();
      if (spec.cells != prev.quadrature.cells && prev.error > 0.0 && row.error > 0.0)
        row.order = std::log(prev.error / row.error) / std::log(static_cast<double>(spec.cells) / prev.quadrature.cells);
    }
    table.levels.push_back(row);
  }
  return table;
}

}  // namespace stokes
