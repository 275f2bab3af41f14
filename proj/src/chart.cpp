#include "stokes/chart.hpp"

#include <cmath>
#include <numeric>

namespace stokes {

ChartMap::ChartMap(int k, std::vector<Expression> components) : k_(k), components_(std::move(components)) {
  const int n = ambient_dimension();
  if (k < 1) throw std::invalid_argument("chart domain dimension must be >= 1");
  if (n < k)
    throw std::invalid_argument("chart has " + std::to_string(n) + " components; it needs at least k = " +
                                std::to_string(k));
  if (n > kMaxDim) throw std::invalid_argument("chart ambient dimension exceeds " + std::to_string(kMaxDim));
  const auto slots = indexed_names('x', k);
  for (int i = 0; i < n; ++i) {
    for (const auto& name : free_variables(components_[static_cast<std::size_t>(i)])) {
      bool ok = false;
      for (const auto& s : slots) ok = ok || s == name;
      if (!ok)
        throw std::invalid_argument("chart component " + std::to_string(i + 1) + " references '" + name +
                                    "' (allowed: x1..x" + std::to_string(k) + ")");
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto& c = components_[static_cast<std::size_t>(i)];
    compiled_.emplace_back(c, slots);
    for (int j = 0; j < k; ++j) {
      partials_.push_back(differentiate(c, slots[static_cast<std::size_t>(j)]));
      compiled_partials_.emplace_back(partials_.back(), slots);
    }
  }
}

ChartMap ChartMap::identity(int k) {
  std::vector<Expression> components;
  for (const auto& name : indexed_names('x', k)) components.push_back(Expression::variable(name));
  return ChartMap(k, std::move(components));
}

Vec ChartMap::operator()(std::span<const double> x) const {
  Vec y(ambient_dimension());
  for (int i = 0; i < ambient_dimension(); ++i) y[i] = value(i, x);
  return y;
}

Matrix ChartMap::jacobian(std::span<const double> x) const {
  Matrix d(ambient_dimension(), k_);
  for (int i = 0; i < ambient_dimension(); ++i)
    for (int j = 0; j < k_; ++j) d(i, j) = partial_value(i, j, x);
  return d;
}

CompiledForm::CompiledForm(const DifferentialForm& form) : degree_(form.degree()), n_(form.ambient_dimension()) {
  const auto slots = indexed_names('y', n_);
  for (const auto& term : form.terms()) {
    Term t;
    for (int i : term.index.indices()) {
      t.rows.push_back(i - 1);
      used_rows_ |= 1u << (i - 1);
    }
    t.coeff = CompiledExpression(term.coeff, slots);
    terms_.push_back(std::move(t));
  }
}

namespace {

void check_dimensions(const CompiledForm& form, const ChartMap& chart, const NormalSet& set, int degree) {
  if (chart.domain_dimension() != set.dimension())
    throw std::invalid_argument("chart domain dimension does not match the region");
  if (form.ambient_dimension() != chart.ambient_dimension())
    throw std::invalid_argument("form ambient dimension does not match the chart");
  if (form.degree() != degree)
    throw std::invalid_argument("form degree " + std::to_string(form.degree()) + " does not fit this integrand (" +
                                std::to_string(degree) + " expected)");
}

// out(r, ci) = sum_p DPhi(r, p) * Dc(p, cols[ci]) for rows in `rows`, skipping
// exact zeros of Dc so that DPhi entries are only evaluated where needed.
void chain_columns(const ChartMap& chart, const CubeJet& jet, std::uint32_t rows, std::span<const int> cols,
                   Matrix& out) {
  const int n = chart.ambient_dimension();
  const int k = chart.domain_dimension();
  const std::span<const double> x(jet.x.data(), static_cast<std::size_t>(k));
  double dphi[kMaxDim][kMaxDim];
  bool have[kMaxDim][kMaxDim] = {};
  out.setZero(n, static_cast<Eigen::Index>(cols.size()));
  for (int r = 0; r < n; ++r) {
    if (((rows >> r) & 1u) == 0) continue;
    for (std::size_t ci = 0; ci < cols.size(); ++ci) {
      const int m = cols[ci];
      double sum = 0.0;
      for (int p = m; p < k; ++p) {
        const double dc = jet.dc(p, m);
        if (dc == 0.0) continue;
        if (!have[r][p]) {
          dphi[r][p] = chart.partial_value(r, p, x);
          have[r][p] = true;
        }
        sum += dphi[r][p] * dc;
      }
      out(r, static_cast<Eigen::Index>(ci)) = sum;
    }
  }
}

double combine(const CompiledForm& form, const ChartMap& chart, const Vec& x, const Matrix& jac) {
  const int n = chart.ambient_dimension();
  int all[kMaxDim];
  std::iota(all, all + jac.cols(), 0);
  const std::span<const int> cols(all, static_cast<std::size_t>(jac.cols()));
  double y[kMaxDim];
  bool have_y = false;
  double sum = 0.0;
  for (const auto& term : form.terms()) {
    const double det = minor_determinant(jac, term.rows, cols);
    if (det == 0.0) continue;
    if (!have_y) {
      for (int i = 0; i < n; ++i) y[i] = chart.value(i, as_span(x));
      have_y = true;
    }
    sum += term.coeff(std::span<const double>(y, static_cast<std::size_t>(n))) * det;
  }
  return sum;
}

int kept_columns(int k, int omit, int* cols) {
  int r = 0;
  for (int m = 0; m < k; ++m)
    if (m != omit) cols[r++] = m;
  return r;
}

}  // namespace

Matrix chart_jacobian_through_cube(const ChartMap& chart, const NormalSet& set, std::span<const double> t) {
  if (chart.domain_dimension() != set.dimension())
    throw std::invalid_argument("chart domain dimension does not match the region");
  CubeJet jet;
  evaluate_cube_map(set, t, kAllColumns, false, jet);
  int cols[kMaxDim];
  const int r = kept_columns(set.dimension(), -1, cols);
  Matrix out;
  chain_columns(chart, jet, kAllColumns, std::span<const int>(cols, static_cast<std::size_t>(r)), out);
  return out;
}

double pullback_value(const CompiledForm& form, const ChartMap& chart, const NormalSet& set, std::span<const double> t,
                      int omit_column) {
  const int k = set.dimension();
  check_dimensions(form, chart, set, omit_column < 0 ? k : k - 1);
  const std::uint32_t mask = omit_column < 0 ? kAllColumns : (kAllColumns & ~(1u << omit_column));
  CubeJet jet;
  evaluate_cube_map(set, t, mask, true, jet);
  if (jet.degenerate) return 0.0;
  int cols[kMaxDim];
  const int r = kept_columns(k, omit_column, cols);
  Matrix jac;
  chain_columns(chart, jet, form.used_rows(), std::span<const int>(cols, static_cast<std::size_t>(r)), jac);
  return combine(form, chart, jet.x, jac);
}

double pullback_value_reparametrized(const CompiledForm& form, const ChartMap& chart, const NormalSet& set,
                                     const ChartMap& rho, std::span<const double> t, int omit_column) {
  const int k = set.dimension();
  check_dimensions(form, chart, set, omit_column < 0 ? k : k - 1);
  if (rho.domain_dimension() != k || rho.ambient_dimension() != k)
    throw std::invalid_argument("reparametrization must map R^k to R^k");
  const Vec u = rho(t);
  const Matrix drho = rho.jacobian(t);
  int cols[kMaxDim];
  const int r = kept_columns(k, omit_column, cols);
  // Columns of D(Phi o c) that meet a nonzero entry of the kept Drho columns.
  std::uint32_t needed = 0;
  for (int m = 0; m < k; ++m)
    for (int ci = 0; ci < r; ++ci)
      if (drho(m, cols[ci]) != 0.0) needed |= 1u << m;
  CubeJet jet;
  evaluate_cube_map(set, as_span(u), needed, false, jet);
  int inner[kMaxDim];
  int count = 0;
  for (int m = 0; m < k; ++m)
    if ((needed >> m) & 1u) inner[count++] = m;
  Matrix partial;
  chain_columns(chart, jet, form.used_rows(), std::span<const int>(inner, static_cast<std::size_t>(count)), partial);
  Matrix jac = Matrix::Zero(chart.ambient_dimension(), r);
  for (int ci = 0; ci < r; ++ci)
    for (int a = 0; a < count; ++a) {
      const double w = drho(inner[a], cols[ci]);
      if (w != 0.0) jac.col(ci) += w * partial.col(a);
    }
  return combine(form, chart, jet.x, jac);
}

double pullback_integrand(const DifferentialForm& form, const ChartMap& chart, const NormalSet& set,
                          std::span<const double> t) {
  return pullback_value(CompiledForm(form), chart, set, t, -1);
}

double det_B_residual(const ChartMap& chart, const NormalSet& set, const MultiIndex& index, std::span<const double> t,
                      double h) {
  const int k = set.dimension();
  if (chart.domain_dimension() != k) throw std::invalid_argument("chart domain dimension does not match the region");
  if (static_cast<int>(index.size()) != k - 1) throw std::invalid_argument("det B needs a multi-index of length k-1");
  if (static_cast<int>(t.size()) != k) throw std::invalid_argument("parameter point has wrong dimension");
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  for (int i = 0; i < k; ++i)
    if (!(t[i] - h > 0.0 && t[i] + h < 1.0))
      throw std::invalid_argument("t +- h must stay inside the open unit cube");
  std::vector<int> rows;
  for (int i : index.indices()) {
    if (i > chart.ambient_dimension()) throw std::invalid_argument("multi-index exceeds the ambient dimension");
    rows.push_back(i - 1);
  }
  auto minor = [&](const Vec& point, int j) {
    const Matrix jac = chart_jacobian_through_cube(chart, set, as_span(point));
    int cols[kMaxDim];
    const int r = kept_columns(k, j, cols);
    return minor_determinant(jac, rows, std::span<const int>(cols, static_cast<std::size_t>(r)));
  };
  double sum = 0.0;
  Vec point(k);
  for (int i = 0; i < k; ++i) point[i] = t[i];
  for (int j = 0; j < k; ++j) {
    Vec plus = point;
    Vec minus = point;
    plus[j] += h;
    minus[j] -= h;
    const double difference = (minor(plus, j) - minor(minus, j)) / (2.0 * h);
    sum += (j % 2 == 0 ? 1.0 : -1.0) * difference;
  }
  return std::fabs(sum);
}

}  // namespace stokes
