#include "gpc/rng.hpp"

#include <cmath>
#include <numbers>

namespace gpc {

double normal_at(std::uint64_t key, std::uint64_t counter) {
  // Two independent uniform lanes per counter slot; Box-Muller, cosine lane.
  const std::uint64_t u1 = mix64(key ^ mix64(2 * counter));
  const std::uint64_t u2 = mix64(key ^ mix64(2 * counter + 1));
  const double r = std::sqrt(-2.0 * std::log(unit_double(u1)));
  return r * std::cos(2.0 * std::numbers::pi * unit_double(u2));
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd normal_vector_at(std::uint64_t key, std::uint64_t counter, Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  const std::uint64_t base = counter * static_cast<std::uint64_t>(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    v[i] = normal_at(key, base + static_cast<std::uint64_t>(i));
  }
  return v;
}

}  // namespace gpc
