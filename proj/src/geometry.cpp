#include "stokes/geometry.hpp"

#include <cmath>
#include <sstream>

namespace stokes {

namespace {

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

void check_scope(const Expression& e, int axis, const char* which) {
  for (const auto& name : free_variables(e)) {
    bool allowed = false;
    for (int p = 1; p <= axis; ++p)
      if (name == "x" + std::to_string(p)) allowed = true;
    if (!allowed) {
      std::ostringstream os;
      os << which << " bound of x" << axis + 1 << " references '" << name << "'";
      if (axis == 0)
        os << " (the first bounds must be constant)";
      else
        os << " (allowed: x1..x" << axis << ")";
      throw ScopeError(os.str());
    }
  }
}

}  // namespace

std::string to_string(const Face& face) {
  return "t" + std::to_string(face.axis + 1) + (face.side == Side::Top ? "=1" : "=0");
}

NormalSet::NormalSet(std::vector<Bound> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw std::invalid_argument("normal set needs at least one axis");
  if (dimension() > kMaxDim) throw std::invalid_argument("normal set dimension exceeds " + std::to_string(kMaxDim));
  const auto slots = indexed_names('x', dimension());
  compiled_.reserve(bounds_.size());
  for (int axis = 0; axis < dimension(); ++axis) {
    const Bound& b = bounds_[static_cast<std::size_t>(axis)];
    check_scope(b.lower, axis, "lower");
    check_scope(b.upper, axis, "upper");
    CompiledBound cb{CompiledExpression(b.lower, slots), CompiledExpression(b.upper, slots), {}, {}};
    for (int var = 0; var < axis; ++var) {
      const auto& name = slots[static_cast<std::size_t>(var)];
      cb.lower_partials.emplace_back(differentiate(b.lower, name), slots);
      cb.upper_partials.emplace_back(differentiate(b.upper, name), slots);
    }
    compiled_.push_back(std::move(cb));
  }
}

RegularSet::RegularSet(std::vector<NormalSet> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("regular set needs at least one piece");
  for (const auto& piece : pieces_)
    if (piece.dimension() != pieces_.front().dimension())
      throw std::invalid_argument("all pieces of a regular set must have the same dimension");
}

RegularSet::RegularSet(NormalSet piece) : RegularSet(std::vector<NormalSet>{std::move(piece)}) {}

void evaluate_cube_map(const NormalSet& set, std::span<const double> t, std::uint32_t columns, bool stop_on_degenerate,
                       CubeJet& jet) {
  const int k = set.dimension();
  if (static_cast<int>(t.size()) != k) throw std::invalid_argument("parameter point has wrong dimension");
  jet.x.setZero(k);
  jet.diagonal.resize(k);
  jet.degenerate = false;
  const std::span<const double> x(jet.x.data(), static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const double f = set.lower(j, x);
    const double g = set.upper(j, x);
    jet.x[j] = (1.0 - t[j]) * f + t[j] * g;
    jet.diagonal[j] = g - f;
  }

  auto wanted = [columns](int m) { return m >= 32 || ((columns >> m) & 1u) != 0; };
  for (int m = 0; m < k; ++m) {
    if (wanted(m) && jet.diagonal[m] == 0.0) {
      jet.degenerate = true;
      if (stop_on_degenerate) return;
    }
  }

  jet.dc.setZero(k, k);
  // h(l, p) = d/dx_p [(1 - t_l) f_l + t_l g_l], evaluated on first use.
  double h[kMaxDim][kMaxDim];
  bool have[kMaxDim][kMaxDim] = {};
  auto coupling = [&](int l, int p) {
    if (!have[l][p]) {
      double v = 0.0;
      if (1.0 - t[l] != 0.0) v += (1.0 - t[l]) * set.lower_partial(l, p, x);
      if (t[l] != 0.0) v += t[l] * set.upper_partial(l, p, x);
      h[l][p] = v;
      have[l][p] = true;
    }
    return h[l][p];
  };
  for (int m = 0; m < k; ++m) {
    if (!wanted(m)) continue;
    jet.dc(m, m) = jet.diagonal[m];
    for (int l = m + 1; l < k; ++l) {
      double sum = 0.0;
      for (int p = m; p < l; ++p) {
        if (jet.dc(p, m) == 0.0) continue;
        sum += coupling(l, p) * jet.dc(p, m);
      }
      jet.dc(l, m) = sum;
    }
  }
}

Vec cube_param(const NormalSet& set, std::span<const double> t) {
  CubeJet jet;
  evaluate_cube_map(set, t, 0u, true, jet);
  return jet.x;
}

Matrix cube_param_jacobian(const NormalSet& set, std::span<const double> t) {
  CubeJet jet;
  evaluate_cube_map(set, t, kAllColumns, false, jet);
  return jet.dc;
}

Vec face_point(const Face& face, std::span<const double> s) {
  const int k = static_cast<int>(s.size()) + 1;
  if (face.axis < 0 || face.axis >= k) throw std::invalid_argument("face axis out of range");
  Vec t(k);
  for (int i = 0, src = 0; i < k; ++i) t[i] = i == face.axis ? (face.side == Side::Top ? 1.0 : 0.0) : s[src++];
  return t;
}

Vec face_param(const NormalSet& set, const Face& face, std::span<const double> s) {
  if (static_cast<int>(s.size()) + 1 != set.dimension()) throw std::invalid_argument("face point has wrong dimension");
  Vec t = face_point(face, s);
  return cube_param(set, as_span(t));
}

bool contains(const NormalSet& set, std::span<const double> x) {
  if (static_cast<int>(x.size()) != set.dimension()) throw std::invalid_argument("point has wrong dimension");
  for (int j = 0; j < set.dimension(); ++j) {
    if (!(set.lower(j, x) <= x[j] && x[j] <= set.upper(j, x))) return false;
  }
  return true;
}

NormalSet shrink(const NormalSet& set, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("shrink needs epsilon > 0");
  const Expression eps = Expression::constant(epsilon);
  std::vector<Bound> bounds;
  for (const auto& b : set.bounds()) {
    Expression lower = min(b.lower + eps, b.upper);
    Expression upper = max(b.upper - eps, lower);
    bounds.push_back({lower, upper});
  }
  return NormalSet(std::move(bounds));
}

Vec outward_vector(const NormalSet& set, const Face& face, std::span<const double> x) {
  const int k = set.dimension();
  if (face.axis < 0 || face.axis >= k) throw std::invalid_argument("face axis out of range");
  Vec n = Vec::Zero(k);
  const int j = face.axis;
  if (face.side == Side::Top) {
    n[j] = 1.0;
    for (int s = 0; s < j; ++s) n[s] = -set.upper_partial(j, s, x);
  } else {
    n[j] = -1.0;
    for (int s = 0; s < j; ++s) n[s] = set.lower_partial(j, s, x);
  }
  return n;
}

void for_each_lattice_point(int dimension, int per_axis, const std::function<void(std::span<const double>)>& visit) {
  std::vector<int> index(static_cast<std::size_t>(dimension), 0);
  std::vector<double> point(static_cast<std::size_t>(dimension));
  for (;;) {
    for (int i = 0; i < dimension; ++i) point[i] = (index[i] + 0.5) / per_axis;
    visit(point);
    int axis = dimension - 1;
    while (axis >= 0 && ++index[axis] == per_axis) index[axis--] = 0;
    if (axis < 0) return;
  }
}

std::vector<std::string> sample_bound_order(const NormalSet& set, int per_axis) {
  std::vector<std::string> findings;
  for_each_lattice_point(set.dimension(), per_axis, [&](std::span<const double> t) {
    try {
      Vec x = cube_param(set, t);
      for (int j = 0; j < set.dimension(); ++j) {
        const double f = set.lower(j, as_span(x));
        const double g = set.upper(j, as_span(x));
        if (g - f < -1e-12 * (1.0 + std::fabs(f) + std::fabs(g))) {
          std::ostringstream os;
          os << "upper bound of x" << j + 1 << " is below the lower bound (" << g << " < " << f << ") at x = "
             << format_point(as_span(x));
          findings.push_back(os.str());
        }
      }
    } catch (const EvaluationError& e) {
      findings.push_back(std::string("bound evaluation failed at t = ") + format_point(t) + ": " + e.what());
    }
  });
  return findings;
}

std::vector<std::string> sample_interior_overlap(const RegularSet& region, int per_axis) {
  std::vector<std::string> findings;
  const auto& pieces = region.pieces();
  for (std::size_t a = 0; a < pieces.size(); ++a) {
    for_each_lattice_point(region.dimension(), per_axis, [&](std::span<const double> t) {
      Vec x;
      try {
        x = cube_param(pieces[a], t);
      } catch (const EvaluationError&) {
        return;
      }
      for (std::size_t b = 0; b < pieces.size(); ++b) {
        if (b == a) continue;
        bool strictly_inside = true;
        try {
          for (int j = 0; j < region.dimension() && strictly_inside; ++j) {
            const double f = pieces[b].lower(j, as_span(x));
            const double g = pieces[b].upper(j, as_span(x));
            const double margin = 1e-12 * (1.0 + std::fabs(f) + std::fabs(g));
            strictly_inside = f + margin < x[j] && x[j] < g - margin;
          }
        } catch (const EvaluationError&) {
          strictly_inside = false;
        }
        if (strictly_inside) {
          findings.push_back("interior point " + format_point(as_span(x)) + " of piece " + std::to_string(a) +
                             " lies inside piece " + std::to_string(b));
        }
      }
    });
  }
  return findings;
}

std::vector<std::string> sample_bound_derivatives(const NormalSet& set, double limit, int per_axis) {
  std::vector<std::string> findings;
  const int k = set.dimension();
  std::vector<double> worst(static_cast<std::size_t>(2 * k * k), 0.0);
  bool failed = false;
  for_each_lattice_point(k, per_axis, [&](std::span<const double> t) {
    try {
      Vec x = cube_param(set, t);
      for (int j = 0; j < k; ++j) {
        for (int p = 0; p < j; ++p) {
          double lo = std::fabs(set.lower_partial(j, p, as_span(x)));
          double up = std::fabs(set.upper_partial(j, p, as_span(x)));
          auto& wl = worst[static_cast<std::size_t>((j * k + p) * 2)];
          auto& wu = worst[static_cast<std::size_t>((j * k + p) * 2 + 1)];
          wl = std::isfinite(lo) ? std::max(wl, lo) : INFINITY;
          wu = std::isfinite(up) ? std::max(wu, up) : INFINITY;
        }
      }
    } catch (const EvaluationError&) {
      failed = true;
    }
  });
  for (int j = 0; j < k; ++j) {
    for (int p = 0; p < j; ++p) {
      for (int which = 0; which < 2; ++which) {
        double w = worst[static_cast<std::size_t>((j * k + p) * 2 + which)];
        if (w > limit) {
          std::ostringstream os;
          os << "derivative of the " << (which ? "upper" : "lower") << " bound of x" << j + 1 << " with respect to x"
             << p + 1 << " reaches " << w << " at interior samples; it may be unbounded";
          findings.push_back(os.str());
        }
      }
    }
  }
  if (failed) findings.push_back("bound derivatives could not be evaluated at some interior samples");
  return findings;
}

}  // namespace stokes
