#pragma once

// Shared helpers for the test suites. The finite-difference oracle here is
// deliberately independent of dsopt::ad::grad_check so that backward() can be
// validated against code that never touches the tape's own machinery.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite difference of a scalar function w.r.t. one entry.
inline double central_diff(const std::function<double()>& f, double& entry,
                           double step = 1e-5) {
  const double saved = entry;
  entry = saved + step;
  const double up = f();
  entry = saved - step;
  const double down = f();
  entry = saved;
  return (up - down) / (2.0 * step);
}

// Max relative error between analytic gradients and central differences over
// every entry of every parameter vector.
inline double max_grad_err(const std::function<double()>& f,
                           const std::vector<std::vector<double>*>& params,
                           const std::vector<std::vector<double>>& analytic,
                           double step = 1e-5) {
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      const double numeric = central_diff(f, (*params[p])[i], step);
      worst = std::max(worst, rel_err(analytic[p][i], numeric));
    }
  }
  return worst;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n,
                                         double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Uniform values bounded away from zero, for ops with a kink at the origin.
inline std::vector<double> random_vector_away_from_zero(std::mt19937_64& rng,
                                                        std::size_t n,
                                                        double margin = 1e-2) {
  std::uniform_real_distribution<double> dist(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = (sign(rng) ? 1.0 : -1.0) * dist(rng);
  return v;
}

}  // namespace testutil
