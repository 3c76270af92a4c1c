#include "doctest.h"

#include <cmath>
#include <random>

#include "dsopt/supply.hpp"
#include "testutil.hpp"

using namespace dsopt;

namespace {

SupplyState basic_state() {
  SupplyState s;
  s.stock = 5.0;
  s.lead_actual = 2.0;
  s.lead_max = 4.0;
  s.r_supplier = 0.9;
  s.r_min = 0.8;
  s.defect_rate = 0.02;
  s.c_prod = 1.0;
  s.c_hold = 0.5;
  s.c_trans = {0.2, 0.4, 0.6};
  s.c_short = 2.0;
  return s;
}

void zero_params(DecisionNet& net) {
  for (auto& [name, tensor] : net.params()) {
    std::fill(tensor->values.begin(), tensor->values.end(), 0.0);
  }
}

}  // namespace

TEST_SUITE("supply") {

TEST_CASE("cost accounting matches hand values") {
  SupplyState s = basic_state();

  SUBCASE("order zero with stock exactly covering demand") {
    DecisionVector o;
    o.q_order = 0.0;
    CostBreakdown c = total_cost(o, s, 5.0);
    CHECK(c.production == 0.0);
    CHECK(c.inventory == 0.0);
    CHECK(c.transport == 0.0);
    CHECK(c.shortage == 0.0);
    CHECK(c.total == 0.0);
  }

  SUBCASE("pure shortage") {
    SupplyState empty = s;
    empty.stock = 0.0;
    DecisionVector o;
    o.q_order = 0.0;
    CostBreakdown c = total_cost(o, empty, 10.0);
    CHECK(c.shortage == doctest::Approx(20.0));
    CHECK(c.total == doctest::Approx(20.0));
  }

  SUBCASE("mixed order") {
    DecisionVector o;
    o.q_order = 10.0;
    // mode 0 chosen (all scores zero, tie -> lowest index), c_t = 0.2
    CostBreakdown c = total_cost(o, s, 8.0);
    CHECK(c.production == doctest::Approx(10.0));
    CHECK(c.inventory == doctest::Approx(3.5));
    CHECK(c.transport == doctest::Approx(2.0));
    CHECK(c.shortage == 0.0);
    CHECK(c.total == doctest::Approx(15.5));
  }
}

TEST_CASE("accounting identity and complementarity on fuzzed inputs") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> qty(0.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    SupplyState s = basic_state();
    s.stock = qty(rng);
    DecisionVector o;
    o.q_order = qty(rng);
    o.mode_scores = {qty(rng), qty(rng), qty(rng)};
    const double demand = qty(rng);
    CostBreakdown c = total_cost(o, s, demand);
    // Exact identity, not approximate.
    CHECK(c.total == c.production + c.inventory + c.transport + c.shortage);
    CHECK(c.inventory * c.shortage == 0.0);
    CHECK(c.production >= 0.0);
    CHECK(c.inventory >= 0.0);
    CHECK(c.transport >= 0.0);
    CHECK(c.shortage >= 0.0);
  }
}

TEST_CASE("constraint penalty") {
  SupplyState s = basic_state();
  CostParams p;
  p.rho_demand = 1.0;
  p.rho_lead = 1.0;
  p.rho_rel = 1.0;
  SupplierCatalog catalog;

  SUBCASE("vanishes exactly on the feasible region") {
    DecisionVector o;
    o.q_order = 10.0;
    CHECK(constraint_penalty(o, s, 8.0, p, catalog) == 0.0);
  }

  SUBCASE("single violated demand constraint") {
    DecisionVector o;
    o.q_order = 2.0;  // stock 5 + 2 = 7 < forecast 10
    CHECK(constraint_penalty(o, s, 10.0, p, catalog) == doctest::Approx(3.0));
  }

  SUBCASE("gradient w.r.t. order is -rho in the violated region") {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    ad::Tensor q = ad::Tensor::scalar(2.0);
    tape.watch(q);
    ad::Tensor gap = ad::hinge(ad::sub(ad::Tensor::scalar(10.0),
                                       ad::add_const(q, s.stock)));
    ad::Tensor pen = ad::scale(gap, 3.0);
    ad::Gradients g = tape.backward(pen);
    CHECK(g.at(q).values[0] == doctest::Approx(-3.0));
  }

  SUBCASE("reliability uses the chosen supplier") {
    catalog = {{"good", 0.95, 1.0}, {"bad", 0.5, 1.0}};
    DecisionVector o;
    o.q_order = 10.0;
    o.supplier_scores = {0.0, 1.0};  // argmax picks "bad"
    CHECK(constraint_penalty(o, s, 8.0, p, catalog) ==
          doctest::Approx(0.8 - 0.5));
  }
}

TEST_CASE("service level") {
  CHECK(service_level(95, 100) == doctest::Approx(0.95));
  CHECK(service_level(0, 10) == 0.0);
  CHECK(service_level(10, 10) == 1.0);
  CHECK_THROWS_AS(service_level(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(service_level(5, 3), std::invalid_argument);
}

TEST_CASE("supply loss") {
  CostParams p;
  p.cost_scale = 1.0;

  SUBCASE("alpha only") {
    p.alpha = 1.0;
    p.beta = 0.0;
    CHECK(supply_loss(0.7, 0.5, p, 0.0) == doctest::Approx(0.7));
  }
  SUBCASE("beta only, perfect service") {
    p.alpha = 0.0;
    p.beta = 1.0;
    CHECK(supply_loss(123.0, 1.0, p, 0.0) == 0.0);
  }
  SUBCASE("weighted combination") {
    p.alpha = 0.5;
    p.beta = 0.5;
    CHECK(supply_loss(0.4, 0.9, p, 0.0) == doctest::Approx(0.25));
  }
  SUBCASE("monotone in cost, antitone in service level") {
    p.alpha = 0.3;
    p.beta = 0.7;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> cost(0.0, 10.0);
    std::uniform_real_distribution<double> sl(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const double c = cost(rng), dsl = sl(rng);
      CHECK(supply_loss(c + 0.5, dsl, p, 0.0) >= supply_loss(c, dsl, p, 0.0));
      const double lo = sl(rng) * dsl;  // lo <= dsl
      CHECK(supply_loss(c, lo, p, 0.0) >= supply_loss(c, dsl, p, 0.0));
    }
  }
}

TEST_CASE("repair") {
  SupplyState s = basic_state();
  SupplierCatalog catalog{{"a", 0.95, 3.0}, {"b", 0.85, 2.0}, {"c", 0.6, 1.0}};

  SUBCASE("feasible decision unchanged") {
    DecisionVector o;
    o.q_order = 10.0;
    o.supplier_scores = {0.0, 1.0, -1.0};
    RepairedDecision r = repair(o, 8.0, s, catalog);
    CHECK(r.q_order == 10.0);
    CHECK(r.supplier == 1);  // highest score among feasible {a, b}
    CHECK(!r.violation);
  }

  SUBCASE("demand cover raises the order") {
    SupplyState low = s;
    low.stock = 4.0;
    DecisionVector o;
    o.q_order = 2.0;
    RepairedDecision r = repair(o, 10.0, low, catalog);
    CHECK(r.q_order == doctest::Approx(6.0));  // max(2, 10 - 4)
  }

  SUBCASE("no feasible supplier falls back to max reliability with a flag") {
    SupplyState strict = s;
    strict.r_min = 0.99;
    DecisionVector o;
    o.q_order = 10.0;
    o.supplier_scores = {0.0, 5.0, 0.0};
    RepairedDecision r = repair(o, 8.0, strict, catalog);
    CHECK(r.supplier == 0);  // "a" is the most reliable
    CHECK(r.violation);
  }

  SUBCASE("idempotence") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> qty(0.0, 20.0);
    for (int i = 0; i < 100; ++i) {
      DecisionVector o;
      o.q_order = qty(rng);
      o.supplier_scores = {qty(rng), qty(rng), qty(rng)};
      const double forecast = qty(rng);
      RepairedDecision r1 = repair(o, forecast, s, catalog);
      DecisionVector o2 = o;
      o2.q_order = r1.q_order;
      RepairedDecision r2 = repair(o2, forecast, s, catalog);
      CHECK(r2.q_order == r1.q_order);
      CHECK(r2.supplier == r1.supplier);
      CHECK(r2.mode == r1.mode);
      CHECK(r2.violation == r1.violation);
    }
  }
}

TEST_CASE("decision net with zero parameters") {
  DecisionNetConfig cfg;
  cfg.hidden = {4, 3};
  cfg.supplier_count = 2;
  DecisionNet net(cfg, 1);
  zero_params(net);
  DecisionVector d = net.forward(0.3, basic_state());
  CHECK(d.q_order == doctest::Approx(std::log(2.0)));
  for (double v : d.supplier_scores) CHECK(v == 0.0);
  for (double v : d.mode_scores) CHECK(v == 0.0);
}

TEST_CASE("decision net eval forward is deterministic") {
  DecisionNetConfig cfg;
  cfg.hidden = {8, 4};
  DecisionNet net(cfg, 77);
  SupplyState s = basic_state();
  DecisionVector a = net.forward(0.4, s);
  DecisionVector b = net.forward(0.4, s);
  CHECK(a.q_order == b.q_order);
  CHECK(a.supplier_scores == b.supplier_scores);
  CHECK(a.mode_scores == b.mode_scores);
}

TEST_CASE("decision net rejects non-finite input") {
  DecisionNetConfig cfg;
  cfg.hidden = {4, 3};
  DecisionNet net(cfg, 1);
  ad::Tape tape;
  ad::TapeScope scope(tape);
  CHECK_THROWS_AS(net.forward_nodes(
                      ad::Tensor::scalar(std::numeric_limits<double>::quiet_NaN()),
                      basic_state()),
                  NumericError);
}

TEST_CASE("tiny decision net gradients match finite differences") {
  DecisionNetConfig cfg;
  cfg.hidden = {4, 3};
  cfg.supplier_count = 2;
  cfg.dropout = 0.0;
  DecisionNet net(cfg, 3);
  SupplyState s = basic_state();
  SupplierCatalog catalog{{"a", 0.95, 2.0}, {"b", 0.5, 1.0}};
  CostParams p;
  p.cost_scale = 10.0;

  const double forecast = 0.8;
  const double stock = 0.4;
  const double realized = 0.9;

  auto build_loss = [&]() {
    return supply_loss_nodes(net, ad::Tensor::scalar(forecast), s, stock, realized,
                             p, catalog)
        .loss;
  };

  std::vector<std::vector<double>> analytic;
  std::vector<std::vector<double>*> raw;
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    for (auto& [name, tensor] : net.params()) tape.watch(*tensor);
    ad::Gradients g = tape.backward(build_loss());
    for (auto& [name, tensor] : net.params()) {
      analytic.push_back(g.at(*tensor).values);
      raw.push_back(&tensor->values);
    }
  }
  auto eval = [&]() {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    return build_loss().item();
  };
  CHECK(testutil::max_grad_err(eval, raw, analytic) < 1e-4);
}

TEST_CASE("supply state validation") {
  SupplyState s = basic_state();
  CHECK_NOTHROW(s.validate());
  s.r_supplier = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = basic_state();
  s.stock = -1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  // features() round trip.
  SupplyState t = SupplyState::from_features(basic_state().features());
  CHECK(t.features() == basic_state().features());
}

}  // TEST_SUITE
