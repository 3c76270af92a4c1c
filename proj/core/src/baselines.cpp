#include "dsopt/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace dsopt {

namespace {

// Gaussian elimination with partial pivoting; returns false when a pivot
// vanishes (singular system).
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> rhs,
                  std::vector<double>& out) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[col], a[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * out[c];
    out[i] = acc / a[i][i];
  }
  return true;
}

}  // namespace

double eoq_quantity(const EoqParams& p) {
  if (p.demand <= 0.0 || p.order_cost <= 0.0 || p.holding_cost <= 0.0) {
    throw std::invalid_argument("eoq_quantity: parameters must be > 0");
  }
  return std::sqrt(2.0 * p.demand * p.order_cost / p.holding_cost);
}

double reorder_decision(double stock, const ReorderPolicy& p) {
  if (stock < 0.0) throw std::invalid_argument("reorder_decision: negative stock");
  return stock <= p.reorder_point ? p.order_qty : 0.0;
}

ReorderPolicy make_reorder_policy(double mean_demand, double demand_std,
                                  double lead_time, double order_qty,
                                  double safety_factor) {
  ReorderPolicy p;
  p.safety_factor = safety_factor;
  p.reorder_point =
      mean_demand * lead_time + safety_factor * demand_std * std::sqrt(lead_time);
  p.order_qty = order_qty;
  return p;
}

double naive_forecast(const std::vector<double>& series) {
  if (series.empty()) {
    throw std::invalid_argument("naive_forecast: insufficient history");
  }
  return series.back();
}

double seasonal_naive_forecast(const std::vector<double>& series, std::size_t period) {
  if (period == 0 || series.size() < period) {
    throw std::invalid_argument("seasonal_naive_forecast: insufficient history for period " +
                                std::to_string(period));
  }
  return series[series.size() - period];
}

ArModel linear_ar_fit(const std::vector<double>& series, std::size_t order) {
  if (series.size() <= order) {
    throw std::invalid_argument("linear_ar_fit: series length " +
                                std::to_string(series.size()) +
                                " too short for order " + std::to_string(order));
  }
  ArModel model;
  model.order = order;
  const std::size_t dim = order + 1;  // intercept + lags
  const std::size_t rows = series.size() - order;

  // Normal equations X^T X beta = X^T y with rows [1, y_{t-1}, ..., y_{t-p}].
  std::vector<std::vector<double>> xtx(dim, std::vector<double>(dim, 0.0));
  std::vector<double> xty(dim, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(dim, 1.0);
    for (std::size_t lag = 1; lag <= order; ++lag) {
      row[lag] = series[order + r - lag];
    }
    const double y = series[order + r];
    for (std::size_t i = 0; i < dim; ++i) {
      xty[i] += row[i] * y;
      for (std::size_t j = 0; j < dim; ++j) xtx[i][j] += row[i] * row[j];
    }
  }

  std::vector<double> beta;
  if (!solve_linear(xtx, xty, beta)) {
    model.ridge_fallback = true;
    for (std::size_t i = 0; i < dim; ++i) xtx[i][i] += 1e-8;
    if (!solve_linear(xtx, xty, beta)) {
      throw NumericError("linear_ar_fit: singular system even with ridge");
    }
  }
  model.intercept = beta[0];
  model.coeffs.assign(beta.begin() + 1, beta.end());
  return model;
}

double linear_ar_forecast(const std::vector<double>& history, const ArModel& m) {
  if (history.size() < m.order) {
    throw std::invalid_argument("linear_ar_forecast: insufficient history");
  }
  double acc = m.intercept;
  for (std::size_t lag = 1; lag <= m.order; ++lag) {
    acc += m.coeffs[lag - 1] * history[history.size() - lag];
  }
  return acc;
}

}  // namespace dsopt
