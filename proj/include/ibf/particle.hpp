#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "ibf/config.hpp"
#include "ibf/geometry.hpp"

namespace ibf {

enum class Channel { value, responsiveness };

// Bounded FIFO of scalar history entries.
struct History {
  std::deque<double> items;
  std::size_t cap = 0;

  void push(double v) {
    items.push_back(v);
    while (cap > 0 && items.size() > cap) items.pop_front();
  }
  void clear() { items.clear(); }
  std::size_t size() const { return items.size(); }
};

// Mean of the most recent `window` entries (all entries if fewer).
inline double recent_mean(const History& h, int window) {
  if (h.items.empty() || window < 1) return 0.0;
  const std::size_t n = std::min<std::size_t>(h.items.size(), static_cast<std::size_t>(window));
  double s = 0.0;
  for (std::size_t i = h.items.size() - n; i < h.items.size(); ++i) s += h.items[i];
  return s / static_cast<double>(n);
}

struct Particle {
  LatentPoint location;          // fixed at birth, never moves
  double amplitude = 0.0;        // v (value channel) or w (responsiveness channel)
  double sigma = 1.0;
  double decay_rate = 0.0;       // mu_base while transient, mu_cryst once crystallized
  int birth_context = 0;
  History local_history;         // kernel-weighted same-context discrepancies (D*K)
  History cross_history;         // raw cross-context discrepancies (D)
  std::int64_t update_count = 0;
  std::int64_t cross_count = 0;
  bool crystallized = false;
  bool verified = false;         // verified implies crystallized
};

struct ParticlePopulation {
  Channel channel = Channel::value;
  std::vector<Particle> particles;
  std::size_t capacity = 0;
};

// Context gate: a particle contributes to reads in `active_context` if it was
// born there, or if it is crystallized and has survived cross-context
// verification (broadcast grant).
inline bool read_gate(const Particle& p, int active_context) {
  return p.birth_context == active_context || (p.crystallized && p.verified);
}

inline Particle make_particle(const LatentPoint& location, double amplitude, const EngineConfig& cfg, int birth_context) {
  Particle p;
  p.location = location;
  p.amplitude = amplitude;
  p.sigma = cfg.sigma_star;
  p.decay_rate = cfg.mu_base;
  p.birth_context = birth_context;
  p.local_history.cap = static_cast<std::size_t>(cfg.history_window + cfg.transient_exclusion);
  p.cross_history.cap = static_cast<std::size_t>(cfg.history_window);
  return p;
}

}  // namespace ibf
