#pragma once

#include <span>

#include <Eigen/Dense>

namespace stokes {

/// Largest supported ambient dimension. Small fixed-capacity storage keeps
/// the quadrature hot loops free of heap allocation.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Determinant of the submatrix of `m` picked by `rows` x `cols` (0-based).
/// The empty minor has determinant 1.
double minor_determinant(const Matrix& m, std::span<const int> rows, std::span<const int> cols);

}  // namespace stokes
