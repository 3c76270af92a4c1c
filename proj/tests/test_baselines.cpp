#include "doctest.h"

#include <cmath>
#include <random>

#include "dsopt/baselines.hpp"
#include "dsopt/forecaster.hpp"
#include "testutil.hpp"

using namespace dsopt;

TEST_SUITE("baselines") {

TEST_CASE("economic order quantity") {
  EoqParams p{1000.0, 50.0, 4.0};
  CHECK(eoq_quantity(p) == doctest::Approx(std::sqrt(25000.0)).epsilon(1e-12));

  SUBCASE("square-root homogeneity in demand") {
    EoqParams p4 = p;
    p4.demand *= 4.0;
    CHECK(eoq_quantity(p4) == doctest::Approx(2.0 * eoq_quantity(p)).epsilon(1e-12));
  }
  SUBCASE("vanishing order cost limit") {
    EoqParams tiny = p;
    tiny.order_cost = 1e-12;
    CHECK(eoq_quantity(tiny) < 1e-3);
  }
  SUBCASE("nonpositive parameters rejected") {
    CHECK_THROWS_AS(eoq_quantity({0.0, 50.0, 4.0}), std::invalid_argument);
    CHECK_THROWS_AS(eoq_quantity({1000.0, -1.0, 4.0}), std::invalid_argument);
    CHECK_THROWS_AS(eoq_quantity({1000.0, 50.0, 0.0}), std::invalid_argument);
  }
}

TEST_CASE("reorder point rule") {
  ReorderPolicy p;
  p.reorder_point = 20.0;
  p.order_qty = 75.0;

  CHECK(reorder_decision(30.0, p) == 0.0);
  CHECK(reorder_decision(20.0, p) == 75.0);  // boundary inclusive
  CHECK(reorder_decision(5.0, p) == 75.0);

  SUBCASE("zero demand variance gives ROP = mean * lead time") {
    ReorderPolicy q = make_reorder_policy(10.0, 0.0, 4.0, 50.0);
    CHECK(q.reorder_point == doctest::Approx(40.0).epsilon(1e-12));
  }
  SUBCASE("safety stock scales with the safety factor") {
    ReorderPolicy q = make_reorder_policy(10.0, 2.0, 4.0, 50.0, 1.645);
    CHECK(q.reorder_point == doctest::Approx(40.0 + 1.645 * 2.0 * 2.0).epsilon(1e-12));
  }
}

TEST_CASE("naive and seasonal-naive forecasts") {
  CHECK(naive_forecast({3, 5, 7}) == 7.0);
  CHECK(seasonal_naive_forecast({1, 9, 1, 9}, 2) == 1.0);
  CHECK_THROWS_AS(naive_forecast({}), std::invalid_argument);
  CHECK_THROWS_AS(seasonal_naive_forecast({1, 2, 3}, 5), std::invalid_argument);

  SUBCASE("seasonal naive has zero error on an exactly periodic series") {
    std::vector<double> series;
    for (int i = 0; i < 36; ++i) series.push_back(double(i % 6));
    for (std::size_t t = 6; t < series.size(); ++t) {
      std::vector<double> history(series.begin(), series.begin() + std::ptrdiff_t(t));
      CHECK(seasonal_naive_forecast(history, 6) == series[t]);
    }
  }
}

TEST_CASE("linear autoregression") {
  SUBCASE("recovers an exact AR(1)") {
    std::vector<double> series{10.0};
    for (int i = 0; i < 14; ++i) series.push_back(0.5 * series.back());
    ArModel m = linear_ar_fit(series, 1);
    CHECK(std::abs(m.coeffs[0] - 0.5) < 1e-8);
    CHECK(std::abs(m.intercept) < 1e-8);
    CHECK(!m.ridge_fallback);
    CHECK(linear_ar_forecast(series, m) ==
          doctest::Approx(0.5 * series.back()).epsilon(1e-8));
  }

  SUBCASE("constant series falls back to ridge and forecasts the constant") {
    std::vector<double> series(20, 4.0);
    ArModel m = linear_ar_fit(series, 2);
    CHECK(m.ridge_fallback);
    CHECK(linear_ar_forecast(series, m) == doctest::Approx(4.0).epsilon(1e-6));
  }

  SUBCASE("order zero forecasts the training mean") {
    std::vector<double> series{1.0, 2.0, 3.0, 4.0};
    ArModel m = linear_ar_fit(series, 0);
    CHECK(linear_ar_forecast(series, m) == doctest::Approx(2.5).epsilon(1e-12));
  }

  SUBCASE("residuals are orthogonal to the design columns") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<double> series{1.0, -0.5};
    for (int i = 0; i < 200; ++i) {
      const std::size_t n = series.size();
      series.push_back(0.6 * series[n - 1] - 0.3 * series[n - 2] + noise(rng));
    }
    const std::size_t p = 2;
    ArModel m = linear_ar_fit(series, p);
    // Normal equations: X^T r = 0 for r = y - X beta.
    double dot_intercept = 0.0;
    std::vector<double> dot_lag(p, 0.0);
    std::size_t rows = 0;
    for (std::size_t t = p; t < series.size(); ++t) {
      std::vector<double> history(series.begin(), series.begin() + std::ptrdiff_t(t));
      const double r = series[t] - linear_ar_forecast(history, m);
      dot_intercept += r;
      for (std::size_t lag = 1; lag <= p; ++lag) dot_lag[lag - 1] += r * series[t - lag];
      ++rows;
    }
    CHECK(std::abs(dot_intercept / double(rows)) < 1e-8);
    for (double d : dot_lag) CHECK(std::abs(d / double(rows)) < 1e-8);
  }

  SUBCASE("series shorter than the order is rejected") {
    CHECK_THROWS_AS(linear_ar_fit({1.0, 2.0}, 2), std::invalid_argument);
  }
}

TEST_CASE("gru cell") {
  SUBCASE("zero weights halve the hidden state") {
    std::mt19937_64 rng(1);
    RecurrentLayer layer(CellKind::gru, 2, 3, rng);
    std::vector<std::pair<std::string, ad::Tensor*>> params;
    layer.collect_params("g", params);
    for (auto& [name, t] : params) std::fill(t->values.begin(), t->values.end(), 0.0);

    ad::Tape tape;
    ad::TapeScope scope(tape);
    RecurrentLayer::State s;
    s.h = ad::Tensor::vector({0.4, -0.8, 0.2});
    auto next = layer.step(ad::Tensor::vector({1.0, -1.0}), s);
    CHECK(next.h.values[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(next.h.values[1] == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(next.h.values[2] == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("gradients match finite differences") {
    std::mt19937_64 rng(5);
    RecurrentLayer layer(CellKind::gru, 2, 3, rng);
    std::vector<std::pair<std::string, ad::Tensor*>> params;
    layer.collect_params("g", params);
    const std::vector<double> x{0.4, -0.2};
    const std::vector<double> h0{0.1, 0.3, -0.5};

    auto build = [&]() {
      RecurrentLayer::State s;
      s.h = ad::Tensor::vector(h0);
      return ad::mean(ad::square(layer.step(ad::Tensor::vector(x), s).h));
    };
    std::vector<std::vector<double>> analytic;
    std::vector<std::vector<double>*> raw;
    {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      for (auto& [name, t] : params) tape.watch(*t);
      ad::Gradients g = tape.backward(build());
      for (auto& [name, t] : params) {
        analytic.push_back(g.at(*t).values);
        raw.push_back(&t->values);
      }
    }
    auto eval = [&]() {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      return build().item();
    };
    CHECK(testutil::max_grad_err(eval, raw, analytic) < 1e-4);
  }

  SUBCASE("deterministic under fixed inputs") {
    std::mt19937_64 rng(9);
    RecurrentLayer layer(CellKind::gru, 1, 2, rng);
    auto run = [&]() {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      auto s = layer.initial_state();
      s = layer.step(ad::Tensor::vector({0.3}), s);
      s = layer.step(ad::Tensor::vector({-0.6}), s);
      return s.h.values;
    };
    CHECK(run() == run());
  }
}

}  // TEST_SUITE
