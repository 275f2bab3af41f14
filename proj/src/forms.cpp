#include "stokes/forms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stokes {

MultiIndex::MultiIndex(std::vector<int> indices, int n) : indices_(std::move(indices)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 1 || indices_[i] > n)
      throw std::invalid_argument("index " + std::to_string(indices_[i]) + " out of range 1.." + std::to_string(n));
    if (i > 0 && indices_[i - 1] >= indices_[i]) throw std::invalid_argument("multi-index must be strictly increasing");
  }
}

int permutation_sign(const std::vector<int>& indices) {
  int sign = 1;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = i + 1; j < indices.size(); ++j) {
      if (indices[i] == indices[j]) return 0;
      if (indices[i] > indices[j]) sign = -sign;
    }
  }
  return sign;
}

std::optional<FormTerm> canonicalize(const std::vector<int>& indices, const Expression& coeff, int n) {
  for (int i : indices)
    if (i < 1 || i > n) throw std::invalid_argument("index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
  const int sign = permutation_sign(indices);
  if (sign == 0) return std::nullopt;
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  return FormTerm{MultiIndex(std::move(sorted), n), sign > 0 ? coeff : -coeff};
}

DifferentialForm::DifferentialForm(int degree, int n) : degree_(degree), n_(n) {
  if (n < 1) throw std::invalid_argument("ambient dimension must be positive");
  if (degree < 0) throw std::invalid_argument("form degree must be non-negative");
  if (degree > n)
    throw std::invalid_argument("a form of degree " + std::to_string(degree) + " on R^" + std::to_string(n) +
                                " is identically zero and is rejected");
}

DifferentialForm::DifferentialForm(int degree, int n, const std::vector<std::pair<std::vector<int>, Expression>>& terms)
    : DifferentialForm(degree, n) {
  for (const auto& [indices, coeff] : terms) accumulate(indices, coeff);
}

void DifferentialForm::accumulate(const std::vector<int>& indices, const Expression& coeff) {
  if (static_cast<int>(indices.size()) != degree_)
    throw std::invalid_argument("term has " + std::to_string(indices.size()) + " indices but the form has degree " +
                                std::to_string(degree_));
  for (const auto& name : free_variables(coeff)) {
    bool ok = false;
    for (int i = 1; i <= n_; ++i)
      if (name == "y" + std::to_string(i)) ok = true;
    if (!ok)
      throw std::invalid_argument("form coefficient references '" + name + "' (allowed: y1..y" + std::to_string(n_) +
                                  ")");
  }
  auto term = canonicalize(indices, coeff, n_);
  if (!term || term->coeff.is_constant(0.0)) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), term->index,
                             [](const FormTerm& t, const MultiIndex& idx) { return t.index < idx; });
  if (it != terms_.end() && it->index == term->index) {
    it->coeff = it->coeff + term->coeff;
    if (it->coeff.is_constant(0.0)) terms_.erase(it);
    return;
  }
  terms_.insert(it, std::move(*term));
}

DifferentialForm exterior_derivative(const DifferentialForm& form) {
  const int n = form.ambient_dimension();
  if (form.degree() >= n)
    throw std::invalid_argument("exterior derivative of a degree-" + std::to_string(form.degree()) + " form on R^" +
                                std::to_string(n) + " is not defined here");
  DifferentialForm result(form.degree() + 1, n);
  const auto names = indexed_names('y', n);
  for (const auto& term : form.terms()) {
    for (int i = 1; i <= n; ++i) {
      Expression partial = differentiate(term.coeff, names[static_cast<std::size_t>(i - 1)]);
      if (partial.is_constant(0.0)) continue;
      std::vector<int> indices{i};
      indices.insert(indices.end(), term.index.indices().begin(), term.index.indices().end());
      result.accumulate(indices, partial);
    }
  }
  return result;
}

DifferentialForm add(const DifferentialForm& a, const DifferentialForm& b) {
  if (a.degree() != b.degree() || a.ambient_dimension() != b.ambient_dimension())
    throw std::invalid_argument("cannot add forms of different degree or ambient dimension");
  DifferentialForm result = a;
  for (const auto& term : b.terms()) result.accumulate(term.index.indices(), term.coeff);
  return result;
}

DifferentialForm scale(const DifferentialForm& form, const Expression& factor) {
  DifferentialForm result(form.degree(), form.ambient_dimension());
  for (const auto& term : form.terms()) result.accumulate(term.index.indices(), factor * term.coeff);
  return result;
}

DdZeroProbe::DdZeroProbe(const DifferentialForm& form) {
  const int n = form.ambient_dimension();
  const auto slots = indexed_names('y', n);
  for (const auto& term : form.terms()) {
    for (const auto& a : slots) {
      const Expression first = differentiate(term.coeff, a);
      for (const auto& b : slots) second_partials_.emplace_back(differentiate(first, b), slots);
    }
  }
  if (form.degree() + 2 > n) return;
  const DifferentialForm dd = exterior_derivative(exterior_derivative(form));
  for (const auto& term : dd.terms()) dd_.emplace_back(term.coeff, slots);
}

DdZeroSample DdZeroProbe::operator()(std::span<const double> y) const {
  DdZeroSample s;
  for (const auto& c : dd_) s.violation = std::max(s.violation, std::fabs(c(y)));
  for (const auto& c : second_partials_) s.scale = std::max(s.scale, std::fabs(c(y)));
  return s;
}

}  // namespace stokes
