#include "dsopt/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsopt {

namespace {

// Continued-fraction evaluation of the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) {
    throw std::invalid_argument("incomplete_beta: x outside [0,1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, std::size_t df) {
  if (df == 0) throw std::invalid_argument("student_t_two_tailed_p: df must be >= 1");
  const double v = static_cast<double>(df);
  return incomplete_beta(v / 2.0, 0.5, v / (v + t * t));
}

StatResult summarize(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
  StatResult r;
  r.n = xs.size();
  double acc = 0.0;
  for (double v : xs) acc += v;
  r.mean = acc / double(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : xs) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / double(r.n - 1));
  }
  r.ci95_half = 1.96 * r.stddev / std::sqrt(double(r.n));
  return r;
}

StatResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired_ttest: samples must have equal length");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("paired_ttest: degenerate sample (n < 2)");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

  StatResult r = summarize(d);
  if (r.stddev == 0.0) {
    throw std::invalid_argument(
        "paired_ttest: degenerate sample (all differences identical)");
  }
  r.df = a.size() - 1;
  r.t_stat = r.mean / (r.stddev / std::sqrt(double(r.n)));
  r.p_two_tailed = student_t_two_tailed_p(r.t_stat, r.df);
  return r;
}

}  // namespace dsopt
