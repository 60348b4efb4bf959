#include <algorithm>
#include <cmath>

#include "cfaudit/common/error.hpp"
#include "cfaudit/model/learners.hpp"

namespace cfaudit::model {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Objective {
  const Matrix& x;  // standardised
  std::span<const int> y;
  double l2;

  // Returns the objective; fills gradient (d weights then bias) when non-empty.
  double evaluate(std::span<const double> theta, std::span<double> grad) const {
    const std::size_t n = x.rows(), d = x.cols();
    double loss = 0.0;
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = x.row(i);
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j) z += theta[j] * row[j];
      loss += softplus(z) - y[i] * z;
      if (!grad.empty()) {
        const double r = sigmoid(z) - y[i];
        for (std::size_t j = 0; j < d; ++j) grad[j] += r * row[j];
        grad[d] += r;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double reg = 0.0;
    for (std::size_t j = 0; j < d; ++j) reg += theta[j] * theta[j];
    if (!grad.empty()) {
      for (std::size_t j = 0; j <= d; ++j) grad[j] *= inv_n;
      for (std::size_t j = 0; j < d; ++j) grad[j] += l2 * theta[j];
    }
    return loss * inv_n + 0.5 * l2 * reg;
  }

  // Hessian (row-major, (d+1) x (d+1)).
  std::vector<double> hessian(std::span<const double> theta) const {
    const std::size_t n = x.rows(), d = x.cols(), m = d + 1;
    std::vector<double> h(m * m, 0.0);
    std::vector<double> ext(m);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = x.row(i);
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j) z += theta[j] * row[j];
      const double p = sigmoid(z);
      const double w = p * (1.0 - p);
      if (w == 0.0) continue;
      std::copy(row.begin(), row.end(), ext.begin());
      ext[d] = 1.0;
      for (std::size_t a = 0; a < m; ++a) {
        const double wa = w * ext[a];
        if (wa == 0.0) continue;
        double* hrow = h.data() + a * m;
        for (std::size_t b = a; b < m; ++b) hrow[b] += wa * ext[b];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a; b < m; ++b) {
        h[a * m + b] *= inv_n;
        h[b * m + a] = h[a * m + b];
      }
      if (a < d) h[a * m + a] += l2;
    }
    return h;
  }
};

// Solves H s = g for symmetric positive (semi-)definite H via Cholesky with
// diagonal jitter escalation.
std::vector<double> solve_spd(std::vector<double> h, std::span<const double> g) {
  const std::size_t m = g.size();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    std::vector<double> l = h;
    for (std::size_t a = 0; a < m; ++a) l[a * m + a] += jitter;
    bool ok = true;
    for (std::size_t j = 0; j < m && ok; ++j) {
      double s = l[j * m + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[j * m + k] * l[j * m + k];
      if (!(s > 0.0)) {
        ok = false;
        break;
      }
      const double diag = std::sqrt(s);
      l[j * m + j] = diag;
      for (std::size_t i = j + 1; i < m; ++i) {
        double t = l[i * m + j];
        for (std::size_t k = 0; k < j; ++k) t -= l[i * m + k] * l[j * m + k];
        l[i * m + j] = t / diag;
      }
    }
    if (ok) {
      std::vector<double> z(m);
      for (std::size_t i = 0; i < m; ++i) {
        double t = g[i];
        for (std::size_t k = 0; k < i; ++k) t -= l[i * m + k] * z[k];
        z[i] = t / l[i * m + i];
      }
      for (std::size_t i = m; i-- > 0;) {
        double t = z[i];
        for (std::size_t k = i + 1; k < m; ++k) t -= l[k * m + i] * z[k];
        z[i] = t / l[i * m + i];
      }
      return z;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 100.0;
  }
  return {g.begin(), g.end()};  // gradient step as a last resort
}

}  // namespace

LogisticParams LogisticParams::from_json(const nlohmann::ordered_json& j) {
  LogisticParams p;
  p.l2 = j.value("l2", p.l2);
  p.max_iter = j.value("max_iter", p.max_iter);
  p.tol = j.value("tol", p.tol);
  if (p.l2 < 0 || p.max_iter < 1 || p.tol <= 0) throw ValidationError("invalid logistic regression parameters");
  return p;
}

nlohmann::ordered_json LogisticParams::to_json() const {
  return {{"l2", l2}, {"max_iter", max_iter}, {"tol", tol}};
}

LogisticRegression::LogisticRegression(LogisticParams params, Standardizer scaler,
                                       std::vector<double> weights, double bias, bool converged,
                                       int iterations)
    : params_(params),
      scaler_(std::move(scaler)),
      weights_(std::move(weights)),
      bias_(bias),
      converged_(converged),
      iterations_(iterations) {}

std::shared_ptr<const LogisticRegression> LogisticRegression::train(const LogisticParams& params,
                                                                     const Matrix& x,
                                                                     std::span<const int> labels) {
  auto scaler = Standardizer::fit(x);
  const Matrix xs = scaler.apply(x);
  const std::size_t d = x.cols();
  Objective obj{xs, labels, params.l2};

  std::vector<double> theta(d + 1, 0.0);
  std::vector<double> grad(d + 1), trial(d + 1), trial_grad;
  double f = obj.evaluate(theta, grad);
  bool converged = false;
  int it = 0;
  for (; it < params.max_iter; ++it) {
    const double gmax = std::abs(*std::max_element(grad.begin(), grad.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    if (gmax <= params.tol) {
      converged = true;
      break;
    }
    const auto step = solve_spd(obj.hessian(theta), grad);
    double slope = 0.0;
    for (std::size_t j = 0; j <= d; ++j) slope += step[j] * grad[j];
    double t = 1.0;
    double f_trial = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t j = 0; j <= d; ++j) trial[j] = theta[j] - t * step[j];
      f_trial = obj.evaluate(trial, {});
      if (f_trial <= f - 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease representable in floating point: we are at the optimum.
      converged = gmax <= 1e-6;
      break;
    }
    theta.swap(trial);
    f = obj.evaluate(theta, grad);
  }
  if (it == params.max_iter) {
    const double gmax = std::abs(*std::max_element(grad.begin(), grad.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    converged = gmax <= params.tol;
  }
  const double bias = theta[d];
  theta.pop_back();
  return std::make_shared<LogisticRegression>(params, std::move(scaler), std::move(theta), bias,
                                              converged, it);
}

void LogisticRegression::predict_proba(const Matrix& rows, std::span<double> out) const {
  const std::size_t d = weights_.size();
  if (rows.cols() != d) throw ValidationError("logistic regression: input width mismatch");
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto row = rows.row(i);
    double z = bias_;
    for (std::size_t j = 0; j < d; ++j) z += weights_[j] * (row[j] - scaler_.mean[j]) / scaler_.scale[j];
    out[i] = sigmoid(z);
  }
}

nlohmann::ordered_json LogisticRegression::parameters() const {
  return {{"scaler", scaler_.to_json()},
          {"weights", weights_},
          {"bias", bias_},
          {"converged", converged_},
          {"iterations", iterations_}};
}

std::shared_ptr<const LogisticRegression> LogisticRegression::from_json(
    const nlohmann::ordered_json& hyper, const nlohmann::ordered_json& params) {
  auto scaler = Standardizer::from_json(params.at("scaler"));
  auto weights = params.at("weights").get<std::vector<double>>();
  if (weights.size() != scaler.mean.size()) throw ValidationError("logistic regression: weight size mismatch");
  return std::make_shared<LogisticRegression>(LogisticParams::from_json(hyper), std::move(scaler),
                                              std::move(weights), params.at("bias").get<double>(),
                                              params.value("converged", true), params.value("iterations", 0));
}

}  // namespace cfaudit::model
