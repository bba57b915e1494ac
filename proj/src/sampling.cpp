#include <algorithm>
#include <limits>
#include <numeric>

#include "mdao/surrogate.hpp"

namespace mdao {

Eigen::VectorXd DesignSpace::lower() const {
  Eigen::VectorXd v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v(i) = variables[i].lower;
  return v;
}

Eigen::VectorXd DesignSpace::upper() const {
  Eigen::VectorXd v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v(i) = variables[i].upper;
  return v;
}

Eigen::VectorXd DesignSpace::to_unit(const Eigen::VectorXd& x) const {
  return ((x - lower()).array() / (upper() - lower()).array()).matrix();
}

Eigen::VectorXd DesignSpace::from_unit(const Eigen::VectorXd& u) const {
  return lower() + (u.array() * (upper() - lower()).array()).matrix();
}

bool DesignSpace::contains(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(x(i) >= variables[i].lower && x(i) <= variables[i].upper)) return false;
  }
  return true;
}

void validate(const DesignSpace& space) {
  if (space.variables.empty()) throw DomainError("design space has no variables");
  for (const auto& v : space.variables) {
    if (!(v.lower < v.upper)) throw DomainError("variable '" + v.name + "' needs lower < upper");
  }
}

namespace {

double min_pairwise_distance(const Eigen::MatrixXd& u) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < u.rows(); ++j) best = std::min(best, (u.row(i) - u.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

}  // namespace

Eigen::MatrixXd lhs_sample(const DesignSpace& space, int n, std::uint64_t seed) {
  validate(space);
  if (n < 2) throw DomainError("a Latin hypercube needs at least 2 points");
  const auto d = static_cast<Eigen::Index>(space.dim());
  Rng rng(seed);
  Eigen::MatrixXd best_u;
  double best_score = -1;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int restart = 0; restart < 10; ++restart) {
    Eigen::MatrixXd u(n, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
      for (int i = 0; i < n; ++i) u(i, k) = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / n;
    }
    double score = min_pairwise_distance(u);
    if (score > best_score) {
      best_score = score;
      best_u = u;
    }
  }
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    x.row(i) = space.from_unit(best_u.row(i).transpose()).transpose();
    // guard the upper edge against rounding
    for (Eigen::Index k = 0; k < d; ++k) {
      x(i, k) = std::clamp(x(i, k), space.variables[static_cast<std::size_t>(k)].lower,
                           space.variables[static_cast<std::size_t>(k)].upper);
    }
  }
  return x;
}

}  // namespace mdao
