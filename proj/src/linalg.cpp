#include "stokes/linalg.hpp"

#include <stdexcept>

namespace stokes {

double minor_determinant(const Matrix& m, std::span<const int> rows, std::span<const int> cols) {
  if (rows.size() != cols.size()) throw std::invalid_argument("minor must be square");
  const auto size = static_cast<Eigen::Index>(rows.size());
  switch (size) {
    case 0:
      return 1.0;
    case 1:
      return m(rows[0], cols[0]);
    case 2:
      return m(rows[0], cols[0]) * m(rows[1], cols[1]) - m(rows[0], cols[1]) * m(rows[1], cols[0]);
    default:
      break;
  }
  Matrix sub(size, size);
  for (Eigen::Index r = 0; r < size; ++r)
    for (Eigen::Index c = 0; c < size; ++c) sub(r, c) = m(rows[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(c)]);
  return sub.determinant();
}

}  // namespace stokes
