#include <algorithm>

#include "mdao/surrogate.hpp"

namespace mdao {

SobolResult sobol_indices(const std::function<double(const Eigen::VectorXd&)>& f, const DesignSpace& space, int n,
                          std::uint64_t seed) {
  validate(space);
  if (n < 2) throw DomainError("Sobol estimation needs at least 2 base samples");
  const auto d = static_cast<Eigen::Index>(space.dim());
  Rng rng(seed);
  Eigen::MatrixXd a(n, d), b(n, d);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) a(i, k) = rng.uniform();
    for (Eigen::Index k = 0; k < d; ++k) b(i, k) = rng.uniform();
  }
  auto eval = [&](const Eigen::VectorXd& u) { return f(space.from_unit(u)); };
  Eigen::VectorXd fa(n), fb(n);
  for (int i = 0; i < n; ++i) {
    fa(i) = eval(a.row(i).transpose());
    fb(i) = eval(b.row(i).transpose());
  }

  SobolResult res;
  double mean = (fa.sum() + fb.sum()) / (2.0 * n);
  res.variance = ((fa.array() - mean).square().sum() + (fb.array() - mean).square().sum()) / (2.0 * n);
  double scale = std::max({fa.cwiseAbs().maxCoeff(), fb.cwiseAbs().maxCoeff(), 1e-300});
  res.first_order.assign(static_cast<std::size_t>(d), 0.0);
  if (res.variance < 1e-12 * scale * scale) {
    res.degenerate = true;
    return res;
  }

  for (Eigen::Index k = 0; k < d; ++k) {
    double sum_ab = 0, sum_ba = 0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd ab = a.row(i).transpose();
      ab(k) = b(i, k);  // A with column k from B
      Eigen::VectorXd ba = b.row(i).transpose();
      ba(k) = a(i, k);  // B with column k from A
      sum_ab += fb(i) * (eval(ab) - fa(i));
      sum_ba += fa(i) * (eval(ba) - fb(i));
    }
    double s = 0.5 * (sum_ab + sum_ba) / n / res.variance;
    res.first_order[static_cast<std::size_t>(k)] = std::clamp(s, -0.05, 1.0);
  }
  return res;
}

}  // namespace mdao
