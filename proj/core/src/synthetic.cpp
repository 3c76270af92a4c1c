#include "dsopt/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dsopt {

namespace {
constexpr double kTau = 6.283185307179586476925286766559;

double uniform_in(std::mt19937_64& rng, const std::array<double, 2>& range) {
  std::uniform_real_distribution<double> dist(range[0], range[1]);
  return range[0] == range[1] ? range[0] : dist(rng);
}
}  // namespace

void SyntheticSpec::validate(std::size_t window_len) const {
  if (horizon < window_len + 2) {
    throw std::invalid_argument("SyntheticSpec: horizon " + std::to_string(horizon) +
                                " too short for window " + std::to_string(window_len));
  }
  if (seasonal_period == 0) {
    throw std::invalid_argument("SyntheticSpec: seasonal period must be >= 1");
  }
  if (noise_std < 0.0 || shock_probability < 0.0 || shock_probability > 1.0) {
    throw std::invalid_argument("SyntheticSpec: bad noise or shock settings");
  }
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  spec.validate(2);
  std::mt19937_64 demand_rng(spec.seed);
  std::mt19937_64 state_rng(spec.seed ^ 0x7F4A7C15ULL);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  std::bernoulli_distribution shock_hit(spec.shock_probability);
  std::bernoulli_distribution shock_sign(0.5);

  SyntheticResult out;
  out.bundle.demand.reserve(spec.horizon);
  if (spec.num_categories > 0) out.bundle.context_labels.resize(1);

  for (std::size_t t = 0; t < spec.horizon; ++t) {
    double y = spec.base_level + spec.trend_slope * double(t) +
               spec.seasonal_amplitude *
                   std::sin(kTau * double(t) / double(spec.seasonal_period));

    if (spec.num_categories > 0) {
      const std::size_t block = std::max<std::size_t>(spec.category_block, 1);
      const std::size_t cat = (t / block) % spec.num_categories;
      y += spec.category_shift *
           (double(cat) - double(spec.num_categories - 1) / 2.0);
      out.bundle.context_labels[0].push_back("cat" + std::to_string(cat));
    }

    if (spec.noise_std > 0.0) y += noise(demand_rng);
    if (spec.shock_probability > 0.0 && shock_hit(demand_rng)) {
      y += (shock_sign(demand_rng) ? 1.0 : -1.0) * spec.shock_magnitude;
      ++out.shock_count;
    }
    out.bundle.demand.push_back(std::max(0.0, y));

    SupplyState s;
    s.stock = uniform_in(state_rng, spec.states.stock);
    s.lead_actual = uniform_in(state_rng, spec.states.lead_time);
    s.lead_max = spec.states.lead_max;
    s.r_supplier = uniform_in(state_rng, spec.states.reliability);
    s.r_min = spec.states.reliability_min;
    s.defect_rate = uniform_in(state_rng, spec.states.defect_rate);
    s.c_prod = spec.states.unit_cost_production;
    s.c_hold = spec.states.unit_cost_holding;
    s.c_trans = spec.states.unit_cost_transport;
    s.c_short = spec.states.unit_cost_shortage;
    out.bundle.states.push_back(s);
  }
  return out;
}

}  // namespace dsopt
