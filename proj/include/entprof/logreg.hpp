#pragma once

// L1-penalized logistic regression,
//
//   minimize  C * sum_i w_i * logloss(y_i, x_i.beta + b) + ||beta||_1
//
// with an unpenalized intercept, solved by proximal Newton iterations with
// an Armijo line search. Weights reach exact zeros.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "entprof/error.hpp"
#include "entprof/matrix.hpp"

namespace entprof {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(-s*z)) for s = +1 (y = 1) or s = -1 (y = 0).
inline double logistic_loss(double z, int y) {
  double m = y != 0 ? z : -z;
  return std::log1p(std::exp(-std::abs(m))) + std::max(-m, 0.0);
}

struct LogRegModel {
  std::vector<double> weights;
  double intercept = 0.0;

  double decision(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
    return z;
  }
  double predict(std::span<const double> x) const { return sigmoid(decision(x)); }

  bool operator==(const LogRegModel&) const = default;
};

struct LogRegOptions {
  double tolerance = 1e-6;  // on the min-norm subgradient of the objective
  int max_iter = 10000;     // outer Newton iterations
};

struct LogRegFit {
  LogRegModel model;
  int iterations = 0;
  double violation = 0.0;
};

/// Balanced class weights n / (2 n_c); all ones when balancing is off.
inline std::vector<double> class_weights(std::span<const int> y, bool balance) {
  std::vector<double> w(y.size(), 1.0);
  if (!balance) return w;
  std::size_t n1 = 0;
  for (int v : y) n1 += v != 0;
  std::size_t n0 = y.size() - n1;
  if (n0 == 0 || n1 == 0) return w;
  double n = static_cast<double>(y.size());
  double w0 = n / (2.0 * static_cast<double>(n0));
  double w1 = n / (2.0 * static_cast<double>(n1));
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] != 0 ? w1 : w0;
  return w;
}

inline void require_both_classes(std::span<const int> y) {
  bool has0 = false, has1 = false;
  for (int v : y) (v != 0 ? has1 : has0) = true;
  if (!has0 || !has1) fail(ErrorCode::kSingleClass, "training data contains a single class");
}

namespace detail {

/// Proximal Newton: each outer iteration minimizes the second-order model
/// of the smooth loss plus the L1 term by coordinate descent on the
/// (d+1)x(d+1) Hessian, then line-searches the true objective along the
/// resulting direction. Column 0 of the parameter vector is the intercept.
class ProximalNewton {
 public:
  ProximalNewton(const Matrix& x, std::span<const int> y, std::span<const double> w, double c)
      : x_(x), y_(y), w_(w), c_(c), n_(x.rows()), m_(x.cols() + 1), z_(n_), z_try_(n_) {}

  LogRegFit run(const LogRegOptions& opt) {
    std::vector<double> theta(m_, 0.0);
    // With beta = 0 the optimal intercept is the weighted log-odds.
    double sw1 = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      sw += w_[i];
      if (y_[i]) sw1 += w_[i];
    }
    theta[0] = std::log(sw1 / (sw - sw1));
    std::fill(z_.begin(), z_.end(), theta[0]);
    double f = objective(z_, theta);

    std::vector<double> g(m_), h(m_ * m_), target(m_), dir(m_), hd(m_);
    LogRegFit fit;
    for (int it = 0; it < opt.max_iter; ++it) {
      fit.iterations = it + 1;
      derivatives(g, h);
      fit.violation = violation(g, theta);
      if (fit.violation <= opt.tolerance) break;

      solve_model(g, h, theta, target, hd);
      for (std::size_t j = 0; j < m_; ++j) dir[j] = target[j] - theta[j];
      double expected = 0.0;
      for (std::size_t j = 0; j < m_; ++j) expected += g[j] * dir[j];
      for (std::size_t j = 1; j < m_; ++j) expected += std::abs(target[j]) - std::abs(theta[j]);

      bool moved = false;
      double lambda = 1.0;
      std::vector<double> trial(m_);
      for (int ls = 0; ls < 60 && !moved; ++ls, lambda *= 0.5) {
        // The full step uses the model minimizer itself so exact zeros survive.
        for (std::size_t j = 0; j < m_; ++j) trial[j] = lambda == 1.0 ? target[j] : theta[j] + lambda * dir[j];
        decision(trial, z_try_);
        double f_try = objective(z_try_, trial);
        if (f_try <= f + 0.01 * lambda * expected) {
          theta.swap(trial);
          z_.swap(z_try_);
          f = f_try;
          moved = true;
        }
      }
      // No descent step exists at working precision: this is the optimum.
      if (!moved) break;
    }
    if (fit.violation > opt.tolerance && fit.iterations >= opt.max_iter) {
      fail(ErrorCode::kNonConvergence, "logistic regression did not converge in " + std::to_string(opt.max_iter) +
                                           " iterations; final violation " + std::to_string(fit.violation));
    }
    fit.model.intercept = theta[0];
    fit.model.weights.assign(theta.begin() + 1, theta.end());
    return fit;
  }

 private:
  double feature(std::size_t i, std::size_t j) const { return j == 0 ? 1.0 : x_(i, j - 1); }

  void decision(const std::vector<double>& theta, std::vector<double>& z) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = theta[0];
      for (std::size_t j = 1; j < m_; ++j) s += theta[j] * x_(i, j - 1);
      z[i] = s;
    }
  }

  double objective(const std::vector<double>& z, const std::vector<double>& theta) const {
    double loss = 0.0;
    for (std::size_t i = 0; i < n_; ++i) loss += w_[i] * logistic_loss(z[i], y_[i]);
    double l1 = 0.0;
    for (std::size_t j = 1; j < m_; ++j) l1 += std::abs(theta[j]);
    return c_ * loss + l1;
  }

  void derivatives(std::vector<double>& g, std::vector<double>& h) const {
    std::fill(g.begin(), g.end(), 0.0);
    std::fill(h.begin(), h.end(), 0.0);
    std::vector<double> xi(m_);
    for (std::size_t i = 0; i < n_; ++i) {
      double p = sigmoid(z_[i]);
      double r = w_[i] * (p - y_[i]);
      double v = w_[i] * p * (1.0 - p);
      for (std::size_t j = 0; j < m_; ++j) xi[j] = feature(i, j);
      for (std::size_t j = 0; j < m_; ++j) {
        g[j] += r * xi[j];
        double vx = v * xi[j];
        for (std::size_t l = j; l < m_; ++l) h[j * m_ + l] += vx * xi[l];
      }
    }
    for (std::size_t j = 0; j < m_; ++j) {
      g[j] *= c_;
      for (std::size_t l = j; l < m_; ++l) {
        h[j * m_ + l] *= c_;
        h[l * m_ + j] = h[j * m_ + l];
      }
      h[j * m_ + j] += 1e-12;
    }
  }

  /// Largest entry of the minimum-norm subgradient.
  double violation(const std::vector<double>& g, const std::vector<double>& theta) const {
    double worst = std::abs(g[0]);
    for (std::size_t j = 1; j < m_; ++j) {
      double v;
      if (theta[j] > 0.0) {
        v = std::abs(g[j] + 1.0);
      } else if (theta[j] < 0.0) {
        v = std::abs(g[j] - 1.0);
      } else {
        v = std::max(0.0, std::abs(g[j]) - 1.0);
      }
      worst = std::max(worst, v);
    }
    return worst;
  }

  /// Coordinate descent on g.d + d'Hd/2 + |theta+d|_1 (intercept excluded
  /// from the penalty); writes theta + d into target.
  void solve_model(const std::vector<double>& g, const std::vector<double>& h, const std::vector<double>& theta,
                   std::vector<double>& target, std::vector<double>& hd) const {
    target = theta;
    std::fill(hd.begin(), hd.end(), 0.0);
    for (int sweep = 0; sweep < 1000; ++sweep) {
      double max_change = 0.0, max_size = 0.0;
      for (std::size_t j = 0; j < m_; ++j) {
        double a = h[j * m_ + j];
        double old = target[j];
        double lin = g[j] + hd[j];
        double u = old - lin / a;
        if (j > 0) {
          double t = 1.0 / a;
          u = u > t ? u - t : (u < -t ? u + t : 0.0);
        }
        double delta = u - old;
        if (delta == 0.0) continue;
        target[j] = u;
        for (std::size_t l = 0; l < m_; ++l) hd[l] += delta * h[l * m_ + j];
        max_change = std::max(max_change, std::abs(delta));
        max_size = std::max(max_size, std::abs(u));
      }
      if (max_change <= 1e-13 * std::max(1.0, max_size)) break;
    }
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  double c_;
  std::size_t n_, m_;
  std::vector<double> z_, z_try_;
};

}  // namespace detail

/// Fits with per-sample weights (typically from class_weights).
inline LogRegFit fit_logreg_l1(const Matrix& x, std::span<const int> y, std::span<const double> sample_weights,
                               double c, const LogRegOptions& opt = {}) {
  if (x.rows() != y.size() || y.size() != sample_weights.size()) {
    fail(ErrorCode::kDimensionMismatch, "X, y and weights must have equal length");
  }
  if (!(c > 0.0)) fail(ErrorCode::kInvalidConfig, "C must be positive");
  require_both_classes(y);
  detail::ProximalNewton solver(x, y, sample_weights, c);
  return solver.run(opt);
}

inline LogRegModel train_logreg_l1(const Matrix& x, std::span<const int> y, double c, bool balance,
                                   const LogRegOptions& opt = {}) {
  auto w = class_weights(y, balance);
  return fit_logreg_l1(x, y, w, c, opt).model;
}

}  // namespace entprof
