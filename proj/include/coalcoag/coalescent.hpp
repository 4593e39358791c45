#pragma once

// Exact continuous-time simulation of the structured coalescent. The state of
// a colony is the multiset of block configurations it holds; a configuration
// counts the sampled leaves of each initial color inside the block.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "coalcoag/error.hpp"
#include "coalcoag/model.hpp"
#include "coalcoag/parallel.hpp"

namespace coalcoag {

using Configuration = std::vector<std::int64_t>;

inline Configuration unit_config(std::size_t d, std::size_t i) {
  Configuration c(d, 0);
  c[i] = 1;
  return c;
}

inline Configuration operator+(const Configuration& a, const Configuration& b) {
  Configuration c(a.size());
  for (std::size_t h = 0; h < a.size(); ++h) c[h] = a[h] + b[h];
  return c;
}

inline std::int64_t l1_norm(const Configuration& c) { return std::accumulate(c.begin(), c.end(), std::int64_t{0}); }

/// "k1|k2|...|kd"
inline std::string config_to_string(const Configuration& c) {
  std::string s;
  for (std::size_t h = 0; h < c.size(); ++h) {
    if (h) s += '|';
    s += std::to_string(c[h]);
  }
  return s;
}

inline Configuration config_from_string(const std::string& s) {
  Configuration c;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, '|')) c.push_back(std::stoll(part));
  return c;
}

struct ColonyState {
  std::map<Configuration, std::int64_t> blocks;
  std::int64_t block_count = 0;

  void add(const Configuration& c, std::int64_t n = 1) {
    if (n <= 0) return;
    blocks[c] += n;
    block_count += n;
  }

  void remove(const Configuration& c) {
    auto it = blocks.find(c);
    if (it == blocks.end()) throw Error(ErrorKind::InvalidParameter, "configuration not present in colony");
    if (--it->second == 0) blocks.erase(it);
    --block_count;
  }

  std::int64_t count(const Configuration& c) const {
    auto it = blocks.find(c);
    return it == blocks.end() ? 0 : it->second;
  }

  /// Configuration of the block at position `index` in [0, block_count) when
  /// blocks are listed in key order; one copy of `excluded` (if given) is skipped.
  const Configuration& block_at(std::int64_t index, const Configuration* excluded = nullptr) const {
    for (const auto& [config, n] : blocks) {
      const std::int64_t available = (excluded && config == *excluded) ? n - 1 : n;
      if (index < available) return config;
      index -= available;
    }
    throw Error(ErrorKind::InvalidParameter, "block index out of range");
  }
};

enum class EventKind { Migration, Coalescence };

struct Event {
  EventKind kind = EventKind::Migration;
  double time = 0.0;  // unscaled
  std::size_t from = 0;
  std::size_t to = 0;  // equals `from` for coalescences
  Configuration first;
  Configuration second;  // empty for migrations
};

struct CoalescentState {
  std::vector<ColonyState> colonies;
  double time = 0.0;                     // unscaled model time
  std::vector<std::int64_t> emigrants;   // E_i: leaves of color i outside colony i

  std::int64_t total_blocks() const {
    std::int64_t n = 0;
    for (const auto& c : colonies) n += c.block_count;
    return n;
  }

  std::vector<std::int64_t> block_counts() const {
    std::vector<std::int64_t> out;
    for (const auto& c : colonies) out.push_back(c.block_count);
    return out;
  }

  /// Number of leaves of each color summed over every block of every colony.
  std::vector<std::int64_t> color_mass() const {
    std::vector<std::int64_t> mass(colonies.size(), 0);
    for (const auto& colony : colonies)
      for (const auto& [config, n] : colony.blocks)
        for (std::size_t h = 0; h < config.size(); ++h) mass[h] += n * config[h];
    return mass;
  }

  double scaled_time(double K) const { return time * K; }
};

inline CoalescentState init_state(const ModelParams& p) {
  CoalescentState s;
  s.colonies.resize(p.d);
  s.emigrants.assign(p.d, 0);
  for (std::size_t i = 0; i < p.d; ++i) s.colonies[i].add(unit_config(p.d, i), p.L0[i]);
  return s;
}

struct EventRates {
  double migration = 0.0;            // K * sum_i L_i * sum_{j != i} w_{i,j}
  std::vector<double> coalescence;   // alpha_i * L_i (L_i - 1) / 2

  double total_coalescence() const { return std::accumulate(coalescence.begin(), coalescence.end(), 0.0); }
  double total() const { return migration + total_coalescence(); }
};

inline EventRates event_rates(const CoalescentState& s, const ModelParams& p) {
  EventRates r;
  r.coalescence.resize(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    const auto L = static_cast<double>(s.colonies[i].block_count);
    r.migration += p.K * L * p.w_out(i);
    r.coalescence[i] = p.alpha[i] * L * (L - 1.0) / 2.0;
  }
  return r;
}

namespace detail {

inline std::size_t pick_weighted(const std::vector<double>& weights, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = k;
    acc += weights[k];
    if (u < acc) return k;
  }
  return last_positive;
}

inline std::int64_t uniform_index(std::int64_t n, Rng& rng) {
  return std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng);
}

/// Chooses and applies one event given the current rates; time is not advanced.
inline Event apply_random_event(CoalescentState& s, const ModelParams& p, const EventRates& rates, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double total = rates.total();
  Event ev;
  if (unif(rng) * total < rates.migration) {
    std::vector<double> out_rates(p.d);
    for (std::size_t i = 0; i < p.d; ++i) out_rates[i] = static_cast<double>(s.colonies[i].block_count) * p.w_out(i);
    const std::size_t i = pick_weighted(out_rates, unif(rng) * std::accumulate(out_rates.begin(), out_rates.end(), 0.0));
    std::vector<double> dest(p.d);
    for (std::size_t j = 0; j < p.d; ++j) dest[j] = p.w(i, j);
    const std::size_t j = pick_weighted(dest, unif(rng) * p.w_out(i));
    Configuration moved = s.colonies[i].block_at(uniform_index(s.colonies[i].block_count, rng));
    s.colonies[i].remove(moved);
    s.colonies[j].add(moved);
    s.emigrants[i] += moved[i];
    s.emigrants[j] -= moved[j];
    ev.kind = EventKind::Migration;
    ev.from = i;
    ev.to = j;
    ev.first = std::move(moved);
  } else {
    const std::size_t i = pick_weighted(rates.coalescence, unif(rng) * rates.total_coalescence());
    auto& colony = s.colonies[i];
    // Uniform ordered pair of distinct blocks, hence a uniform unordered pair.
    Configuration a = colony.block_at(uniform_index(colony.block_count, rng));
    Configuration b = colony.block_at(uniform_index(colony.block_count - 1, rng), &a);
    colony.remove(a);
    colony.remove(b);
    colony.add(a + b);
    ev.kind = EventKind::Coalescence;
    ev.from = ev.to = i;
    ev.first = std::move(a);
    ev.second = std::move(b);
  }
  return ev;
}

}  // namespace detail

/// One Gillespie step: exponential holding time, then an event chosen in
/// proportion to its rate. Mutates `s` and returns the event.
inline Event step(CoalescentState& s, const ModelParams& p, Rng& rng) {
  const EventRates rates = event_rates(s, p);
  const double total = rates.total();
  if (!(total > 0.0)) throw Error(ErrorKind::Absorbed, "no event has positive rate");
  s.time += std::exponential_distribution<double>(total)(rng);
  Event ev = detail::apply_random_event(s, p, rates, rng);
  ev.time = s.time;
  return ev;
}

struct NoOp {
  template <class... Args>
  void operator()(Args&&...) const {}
};

/// Advances `s` to unscaled time t_scaled / K. `on_hold(state, scaled_duration)`
/// is called for every holding interval (the last one truncated at the target),
/// `on_event(state, event)` after every event. Absorption ends the run early
/// with the state held until the target.
template <class HoldFn = NoOp, class EventFn = NoOp>
void simulate_until(CoalescentState& s, const ModelParams& p, double t_scaled, Rng& rng, HoldFn&& on_hold = {},
                    EventFn&& on_event = {}) {
  const double target = t_scaled / p.K;
  if (target < s.time * (1.0 - 1e-12) - 1e-300)
    throw Error(ErrorKind::InvalidParameter, "target time precedes current state time");
  while (true) {
    const EventRates rates = event_rates(s, p);
    const double total = rates.total();
    const double dt = total > 0.0 ? std::exponential_distribution<double>(total)(rng) : INFINITY;
    if (s.time + dt > target) {
      if (target > s.time) on_hold(std::as_const(s), (target - s.time) * p.K);
      s.time = std::max(s.time, target);
      return;
    }
    on_hold(std::as_const(s), dt * p.K);
    s.time += dt;
    Event ev = detail::apply_random_event(s, p, rates, rng);
    ev.time = s.time;
    on_event(std::as_const(s), ev);
  }
}

}  // namespace coalcoag
