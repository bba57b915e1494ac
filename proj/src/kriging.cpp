#include <cmath>
#include <limits>

#include "mdao/surrogate.hpp"

namespace mdao {

namespace {

constexpr double kLogThetaMin = -3;
constexpr double kLogThetaMax = 3;
constexpr double kNuggetStart = 1e-10;
constexpr double kNuggetCap = 1e-4;

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& u, const Eigen::VectorXd& theta, double nugget) {
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1 + nugget;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = ((u.row(i) - u.row(j)).array().square() * theta.transpose().array()).sum();
      r(i, j) = r(j, i) = std::exp(-s);
    }
  }
  return r;
}

struct Factorized {
  Eigen::MatrixXd r;
  Eigen::LLT<Eigen::MatrixXd> chol;
  double nugget = 0;
};

/// Escalates the nugget until the correlation matrix factorizes.
std::optional<Factorized> factorize(const Eigen::MatrixXd& u, const Eigen::VectorXd& theta) {
  for (double nugget = kNuggetStart; nugget <= kNuggetCap * 1.0000001; nugget *= 10) {
    Factorized f;
    f.r = correlation_matrix(u, theta, nugget);
    f.chol.compute(f.r);
    if (f.chol.info() != Eigen::Success) continue;
    if ((f.chol.matrixLLT().diagonal().array() <= 0).any()) continue;
    f.nugget = nugget;
    return f;
  }
  return std::nullopt;
}

Eigen::VectorXd refined_solve(const Factorized& f, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = f.chol.solve(b);
  x += f.chol.solve(b - f.r * x);
  return x;
}

struct Likelihood {
  double value = -std::numeric_limits<double>::infinity();
  double mu = 0;
  double sigma2 = 0;
};

Likelihood concentrated_likelihood(const Factorized& f, const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(y.size());
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
  Eigen::VectorXd ri_one = refined_solve(f, ones);
  Eigen::VectorXd ri_y = refined_solve(f, y);
  Likelihood l;
  l.mu = ones.dot(ri_y) / ones.dot(ri_one);
  Eigen::VectorXd resid = y - l.mu * ones;
  l.sigma2 = std::max(resid.dot(refined_solve(f, resid)) / n, 0.0);
  double log_det = 2 * f.chol.matrixLLT().diagonal().array().log().sum();
  l.value = -0.5 * (n * std::log(std::max(l.sigma2, 1e-300)) + log_det);
  return l;
}

}  // namespace

KrigingModel KrigingModel::fit(const DesignSpace& space, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  validate(space);
  const auto d = static_cast<Eigen::Index>(space.dim());
  const Eigen::Index n = x.rows();
  if (x.cols() != d) throw DomainError("training inputs have the wrong number of columns");
  if (y.size() != n) throw DomainError("training inputs and outputs differ in length");
  if (n < d + 2) {
    throw DomainError("kriging needs at least " + std::to_string(d + 2) + " points, got " + std::to_string(n));
  }
  if (!y.allFinite() || !x.allFinite()) throw DomainError("training data must be finite");

  KrigingModel m;
  m.space_ = space;
  m.u_.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) m.u_.row(i) = space.to_unit(x.row(i).transpose()).transpose();

  m.y_shift_ = y.mean();
  double sd = std::sqrt((y.array() - m.y_shift_).square().mean());
  m.y_scale_ = sd > 1e-300 * std::max(1.0, std::abs(m.y_shift_)) ? sd : 1.0;
  Eigen::VectorXd ys = (y.array() - m.y_shift_) / m.y_scale_;
  const bool constant = sd <= 1e-300 * std::max(1.0, std::abs(m.y_shift_));

  auto evaluate = [&](const Eigen::VectorXd& log_theta) {
    Eigen::VectorXd theta = log_theta.unaryExpr([](double v) { return std::pow(10.0, v); });
    auto f = factorize(m.u_, theta);
    if (!f) return Likelihood{};
    return concentrated_likelihood(*f, ys);
  };

  Eigen::VectorXd best_log = Eigen::VectorXd::Zero(d);
  double best_value = -std::numeric_limits<double>::infinity();
  if (!constant) {
    DesignSpace box;
    for (Eigen::Index k = 0; k < d; ++k) box.variables.push_back({"t" + std::to_string(k), kLogThetaMin, kLogThetaMax, ""});
    Eigen::MatrixXd starts = lhs_sample(box, 8, 20240917);
    for (Eigen::Index s = 0; s < starts.rows(); ++s) {
      Eigen::VectorXd p = starts.row(s).transpose();
      double value = evaluate(p).value;
      double step = 1.0;
      int evals = 0;
      while (step >= 1e-3 && evals < 200 * d) {
        bool improved = false;
        for (Eigen::Index k = 0; k < d && !improved; ++k) {
          for (double dir : {1.0, -1.0}) {
            Eigen::VectorXd q = p;
            q(k) = std::clamp(q(k) + dir * step, kLogThetaMin, kLogThetaMax);
            if (q(k) == p(k)) continue;
            double v = evaluate(q).value;
            ++evals;
            if (v > value) {
              value = v;
              p = q;
              improved = true;
              break;
            }
          }
        }
        if (!improved) step /= 2;
      }
      if (value > best_value) {
        best_value = value;
        best_log = p;
      }
    }
  }

  m.theta_ = best_log.unaryExpr([](double v) { return std::pow(10.0, v); });
  auto f = factorize(m.u_, m.theta_);
  if (!f) {
    std::string dups;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if ((m.u_.row(i) - m.u_.row(j)).norm() < 1e-6) dups += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
      }
    }
    throw DomainError("kriging correlation matrix is singular even with nugget " + std::to_string(kNuggetCap) +
                      "; duplicate training points:" + (dups.empty() ? std::string(" none found") : dups));
  }
  Likelihood l = concentrated_likelihood(*f, ys);
  m.nugget_ = f->nugget;
  m.mu_ = constant ? 0.0 : l.mu;
  m.sigma2_ = constant ? 0.0 : l.sigma2;
  m.log_likelihood_ = l.value;
  m.alpha_ = constant ? Eigen::VectorXd::Zero(n) : refined_solve(*f, ys - m.mu_ * Eigen::VectorXd::Ones(n));
  m.chol_ = f->chol;
  m.ys_ = ys;
  return m;
}

Eigen::VectorXd KrigingModel::leave_one_out() const {
  const Eigen::Index n = u_.rows();
  Eigen::MatrixXd r = correlation_matrix(u_, theta_, nugget_);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd ri(n - 1, n - 1);
    Eigen::VectorXd yi(n - 1), ci(n - 1);
    for (Eigen::Index a = 0, pa = 0; a < n; ++a) {
      if (a == i) continue;
      yi(pa) = ys_(a);
      ci(pa) = r(i, a);
      for (Eigen::Index b = 0, pb = 0; b < n; ++b) {
        if (b == i) continue;
        ri(pa, pb++) = r(a, b);
      }
      ++pa;
    }
    Eigen::LLT<Eigen::MatrixXd> chol(ri);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n - 1);
    double mu = ones.dot(chol.solve(yi)) / ones.dot(chol.solve(ones));
    out(i) = y_shift_ + y_scale_ * (mu + ci.dot(chol.solve(yi - mu * ones)));
  }
  return out;
}

Eigen::VectorXd KrigingModel::correlations(const Eigen::VectorXd& u) const {
  Eigen::VectorXd r(u_.rows());
  for (Eigen::Index i = 0; i < u_.rows(); ++i) {
    double s = ((u_.row(i).transpose() - u).array().square() * theta_.array()).sum();
    r(i) = s == 0 ? 1 + nugget_ : std::exp(-s);
  }
  return r;
}

double KrigingModel::mean(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r = correlations(space_.to_unit(x));
  return y_shift_ + y_scale_ * (mu_ + r.dot(alpha_));
}

Prediction KrigingModel::predict(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r = correlations(space_.to_unit(x));
  Eigen::VectorXd v = chol_.matrixL().solve(r);
  double var = sigma2_ * (1 - v.squaredNorm());
  return {y_shift_ + y_scale_ * (mu_ + r.dot(alpha_)), y_scale_ * std::sqrt(std::max(var, 0.0))};
}

}  // namespace mdao
