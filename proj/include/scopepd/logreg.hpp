#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "scopepd/cart.hpp"
#include "scopepd/hyperparams.hpp"
#include "scopepd/matrix.hpp"
#include "scopepd/tree.hpp"

namespace scopepd {

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  int iterations = 0;
  double final_grad_norm = 0.0;

  double margin(std::span<const double> x) const {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
    return z;
  }
  double predict_proba(std::span<const double> x) const { return sigmoid(margin(x)); }
};

// Objective: (1/W) sum_i c_i [softplus(z_i) - y_i z_i] + (l2/2) ||w||^2,
// where c_i is the class weight of sample i and W = sum_i c_i. The bias is
// not penalized.
struct LogRegObjective {
  const Matrix& x;
  std::span<const int> y;
  ClassWeights cw;
  double l2;

  double total_weight() const {
    double s = 0;
    for (int v : y) s += v ? cw.w_pos : cw.w_neg;
    return s;
  }

  double loss(std::span<const double> w, double b) const {
    double s = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double z = b;
      auto row = x.row(i);
      for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * row[j];
      const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      s += (y[i] ? cw.w_pos : cw.w_neg) * (sp - y[i] * z);
    }
    double reg = 0;
    for (double v : w) reg += v * v;
    return s / total_weight() + 0.5 * l2 * reg;
  }

  // Writes d/dw into grad_w and returns d/db.
  double gradient(std::span<const double> w, double b, std::span<double> grad_w) const {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto row = x.row(i);
      double z = b;
      for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * row[j];
      const double r = (y[i] ? cw.w_pos : cw.w_neg) * (sigmoid(z) - y[i]);
      for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += r * row[j];
      grad_b += r;
    }
    const double inv = 1.0 / total_weight();
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] = grad_w[j] * inv + l2 * w[j];
    return grad_b * inv;
  }

  // Upper bound on the gradient's Lipschitz constant.
  double lipschitz_bound() const {
    double max_sq = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double sq = 1.0;
      for (double v : x.row(i)) sq += v * v;
      max_sq = std::max(max_sq, sq);
    }
    return 0.25 * max_sq + l2;
  }
};

// Full-batch gradient descent until the gradient norm drops below 1e-6 or
// lr_max_iter steps have been taken.
inline LogRegModel fit_logreg(const Matrix& x, std::span<const int> y, const ClassWeights& cw,
                              const Hyperparams& params) {
  check_training_inputs(x, y);
  LogRegObjective obj{x, y, cw, params.lr_l2};
  const double step = params.lr_step > 0 ? params.lr_step : 1.0 / obj.lipschitz_bound();
  LogRegModel m;
  m.weights.assign(x.cols(), 0.0);
  std::vector<double> gw(x.cols());
  double prev_loss = obj.loss(m.weights, m.bias);
  int increases = 0;
  for (int it = 0; it < params.lr_max_iter; ++it) {
    const double gb = obj.gradient(m.weights, m.bias, gw);
    double norm_sq = gb * gb;
    for (double g : gw) norm_sq += g * g;
    m.final_grad_norm = std::sqrt(norm_sq);
    m.iterations = it;
    if (m.final_grad_norm < 1e-6) return m;
    for (std::size_t j = 0; j < gw.size(); ++j) m.weights[j] -= step * gw[j];
    m.bias -= step * gb;
    const double loss = obj.loss(m.weights, m.bias);
    if (!std::isfinite(loss)) {
      throw NumericError("logistic regression loss became non-finite; use a smaller lr_step");
    }
    increases = loss > prev_loss ? increases + 1 : 0;
    if (increases >= 10) {
      throw NumericError("logistic regression diverged (loss rose for 10 consecutive steps); "
                         "use a smaller lr_step");
    }
    prev_loss = loss;
  }
  m.iterations = params.lr_max_iter;
  return m;
}

}  // namespace scopepd
