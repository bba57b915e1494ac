#include <cmath>
#include <limits>

#include "mdao/surrogate.hpp"

namespace mdao {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double expected_improvement(double mean, double sd, double best) {
  double gain = best - mean;
  if (!(sd > 0)) return std::max(gain, 0.0);
  double z = gain / sd;
  return std::max(gain * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

bool Bound::contains(double v, double relative_slack) const {
  if (lower && v < *lower - relative_slack * std::max(std::abs(*lower), 1.0)) return false;
  if (upper && v > *upper + relative_slack * std::max(std::abs(*upper), 1.0)) return false;
  return true;
}

double Bound::violation(double v) const {
  double out = 0;
  if (lower && v < *lower) out = (*lower - v) / std::max(std::abs(*lower), 1.0);
  if (upper && v > *upper) out = (v - *upper) / std::max(std::abs(*upper), 1.0);
  return out;
}

double probability_within(const Prediction& p, const Bound& b) {
  if (!(p.sd > 0)) return b.contains(p.mean) ? 1.0 : 0.0;
  double hi = b.upper ? normal_cdf((*b.upper - p.mean) / p.sd) : 1.0;
  double lo = b.lower ? normal_cdf((*b.lower - p.mean) / p.sd) : 0.0;
  return std::clamp(hi - lo, 0.0, 1.0);
}

double probability_feasible(const std::vector<Prediction>& predictions, const std::vector<Bound>& bounds) {
  if (predictions.size() != bounds.size()) throw DomainError("one bound per constraint prediction is required");
  double p = 1;
  for (std::size_t i = 0; i < predictions.size(); ++i) p *= probability_within(predictions[i], bounds[i]);
  return p;
}

namespace {

struct SearchResult {
  Eigen::VectorXd u;
  double value;
};

SearchResult pattern_search(const Acquisition& acq, const DesignSpace& space, Eigen::VectorXd u, double min_step) {
  const auto d = u.size();
  double value = acq(space.from_unit(u));
  if (!std::isfinite(value)) value = -std::numeric_limits<double>::infinity();
  double step = 0.25;
  while (step >= min_step) {
    bool improved = false;
    for (Eigen::Index k = 0; k < d; ++k) {
      for (double dir : {1.0, -1.0}) {
        Eigen::VectorXd q = u;
        q(k) = std::clamp(q(k) + dir * step, 0.0, 1.0);
        if (q(k) == u(k)) continue;
        double v = acq(space.from_unit(q));
        if (std::isfinite(v) && v > value) {
          value = v;
          u = q;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step /= 2;
  }
  return {u, value};
}

}  // namespace

Eigen::VectorXd propose_infill(const Acquisition& acquisition, const DesignSpace& space,
                               const Eigen::MatrixXd& existing, std::uint64_t seed, const InfillOptions& options) {
  validate(space);
  const auto d = static_cast<Eigen::Index>(space.dim());
  Rng rng(seed);
  Eigen::MatrixXd starts(options.starts, d);
  for (int s = 0; s < options.starts; ++s) {
    for (Eigen::Index k = 0; k < d; ++k) starts(s, k) = rng.uniform();
  }
  SearchResult best{Eigen::VectorXd::Zero(d), -std::numeric_limits<double>::infinity()};
  for (int s = 0; s < options.starts; ++s) {
    SearchResult r = pattern_search(acquisition, space, starts.row(s).transpose(), options.min_step);
    if (r.value > best.value) best = r;
  }
  if (best.value > 0) return space.from_unit(best.u);

  // Nothing left to gain: explore the point farthest from the samples.
  Eigen::MatrixXd known(existing.rows(), d);
  for (Eigen::Index i = 0; i < existing.rows(); ++i) known.row(i) = space.to_unit(existing.row(i).transpose()).transpose();
  Eigen::VectorXd far = starts.row(0).transpose();
  double far_distance = -1;
  for (int c = 0; c < 1024; ++c) {
    Eigen::VectorXd u(d);
    for (Eigen::Index k = 0; k < d; ++k) u(k) = rng.uniform();
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < known.rows(); ++i) nearest = std::min(nearest, (known.row(i).transpose() - u).norm());
    if (nearest > far_distance) {
      far_distance = nearest;
      far = u;
    }
  }
  return space.from_unit(far);
}

}  // namespace mdao
