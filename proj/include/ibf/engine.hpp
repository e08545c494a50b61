#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ibf/config.hpp"
#include "ibf/geometry.hpp"
#include "ibf/particle.hpp"

namespace ibf {

struct WriteReport {
  int cross_exposures = 0;
  int local_updates = 0;
  int nucleations = 0;
  int w_moves = 0;
};

struct LifecycleReport {
  int decayed = 0;
  int crystallized = 0;
  int dissolved = 0;
  int verified_granted = 0;
  int merged = 0;
  int evicted = 0;
};

inline double clip(double v, double bound) {
  return std::max(-bound, std::min(bound, v));
}

// Additive value readout: sum of gated amplitude-weighted kernels.
inline double read_value(const ParticlePopulation& pop, const LatentPoint& z, int active_context) {
  if (pop.channel != Channel::value) throw std::invalid_argument("read_value: population is not a value channel");
  double sum = 0.0;
  for (const Particle& p : pop.particles) {
    if (!read_gate(p, active_context)) continue;
    sum += p.amplitude * gaussian_kernel(z, p.location, p.sigma);
  }
  return sum;
}

// Intensive responsiveness readout: kernel-weighted average of w over gated
// crystallized particles; zero where no crystallized particle is readable.
inline double read_responsiveness(const ParticlePopulation& pop, const LatentPoint& z, int active_context) {
  if (pop.channel != Channel::responsiveness) throw std::invalid_argument("read_responsiveness: population is not a responsiveness channel");
  double num = 0.0, den = 0.0;
  for (const Particle& p : pop.particles) {
    if (!p.crystallized || !read_gate(p, active_context)) continue;
    const double k = gaussian_kernel(z, p.location, p.sigma);
    num += p.amplitude * k;
    den += k;
  }
  return den == 0.0 ? 0.0 : num / den;
}

// Union form over several responsiveness populations (one intensive average).
inline double read_responsiveness(const std::vector<const ParticlePopulation*>& pops, const LatentPoint& z, int active_context) {
  double num = 0.0, den = 0.0;
  for (const ParticlePopulation* pop : pops) {
    if (pop->channel != Channel::responsiveness) throw std::invalid_argument("read_responsiveness: population is not a responsiveness channel");
    for (const Particle& p : pop->particles) {
      if (!p.crystallized || !read_gate(p, active_context)) continue;
      const double k = gaussian_kernel(z, p.location, p.sigma);
      num += p.amplitude * k;
      den += k;
    }
  }
  return den == 0.0 ? 0.0 : num / den;
}

inline double effective_coherence(double base, double delta_r) { return base + delta_r; }

inline double effective_responsiveness(const EngineConfig& cfg, double delta_k) {
  return std::max(cfg.k_min, cfg.k0 + delta_k);
}

// Variance of the local book after dropping the first `transient_exclusion`
// entries ever appended, restricted to the most recent `history_window`.
// Undefined (returns false) with fewer than two eligible entries.
inline bool local_discrepancy_variance(const Particle& p, const EngineConfig& cfg, double& out) {
  const auto& items = p.local_history.items;
  const std::int64_t appended = p.update_count;
  const std::int64_t stored = static_cast<std::int64_t>(items.size());
  std::int64_t skip = cfg.transient_exclusion - (appended - stored);
  if (skip < 0) skip = 0;
  if (skip >= stored) return false;
  std::int64_t begin = skip;
  const std::int64_t eligible = stored - skip;
  if (eligible > cfg.history_window) begin = stored - cfg.history_window;
  const std::int64_t n = stored - begin;
  if (n < 2) return false;
  double mean = 0.0;
  for (std::int64_t i = begin; i < stored; ++i) mean += items[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::int64_t i = begin; i < stored; ++i) {
    const double d = items[static_cast<std::size_t>(i)] - mean;
    var += d * d;
  }
  out = var / static_cast<double>(n);
  return true;
}

/*
 * Two-pass write at a visited latent point.
 *   Pass 1  cross-context crystallized particles within kernel reach log the
 *           raw discrepancy (their contradiction book); no amplitude change.
 *   Pass 2  every same-context value particle takes the kernel-weighted
 *           amplitude update and logs D*K; same-context responsiveness
 *           particles mirror the log and count only.
 *   Nucleation  if no same-context value particle covers the point at
 *           theta_create, a value particle (v = eta_base*D) and its paired
 *           responsiveness particle (w = 0) are born there.
 *   w move  crystallized same-context responsiveness particles within
 *           theta_exposure relax toward the variance-driven target.
 * Populations must be the paired value/responsiveness channels of one engine.
 */
inline WriteReport write_step(ParticlePopulation& value_pop, ParticlePopulation& resp_pop,
                              const LatentPoint& visited, int active_context, double discrepancy,
                              const EngineConfig& cfg, const EngineMode& mode = {}) {
  if (value_pop.channel != Channel::value || resp_pop.channel != Channel::responsiveness)
    throw std::invalid_argument("write_step: populations must be (value, responsiveness)");
  if (!std::isfinite(discrepancy)) throw std::invalid_argument("write_step: discrepancy must be finite");
  require_finite(visited, "write_step");

  WriteReport report;

  if (mode.crucible) {
    for (Particle& p : value_pop.particles) {
      if (!p.crystallized || p.birth_context == active_context) continue;
      if (gaussian_kernel(visited, p.location, p.sigma) < cfg.theta_exposure) continue;
      p.cross_history.push(discrepancy);
      ++p.cross_count;
      ++report.cross_exposures;
    }
  }

  double max_same_context_kernel = -1.0;
  for (Particle& p : value_pop.particles) {
    if (p.birth_context != active_context) continue;
    const double k = gaussian_kernel(visited, p.location, p.sigma);
    if (k > max_same_context_kernel) max_same_context_kernel = k;
    const double eta = p.crystallized ? cfg.eta_cryst : cfg.eta_base;
    p.amplitude = clip(p.amplitude + eta * k * discrepancy, cfg.v_max);
    p.local_history.push(discrepancy * k);
    ++p.update_count;
    ++report.local_updates;
  }
  for (Particle& p : resp_pop.particles) {
    if (p.birth_context != active_context) continue;
    const double k = gaussian_kernel(visited, p.location, p.sigma);
    p.local_history.push(discrepancy * k);
    ++p.update_count;
  }

  const bool nucleate = max_same_context_kernel < cfg.theta_create;
  if (nucleate) {
    Particle v = make_particle(visited, clip(cfg.eta_base * discrepancy, cfg.v_max), cfg, active_context);
    Particle w = make_particle(visited, 0.0, cfg, active_context);
    value_pop.particles.push_back(std::move(v));
    resp_pop.particles.push_back(std::move(w));
    ++report.nucleations;
  }

  if (mode.agency) {
    for (Particle& p : resp_pop.particles) {
      if (!p.crystallized || p.birth_context != active_context) continue;
      if (gaussian_kernel(visited, p.location, p.sigma) < cfg.theta_exposure) continue;
      double d_var = 0.0;
      if (!local_discrepancy_variance(p, cfg, d_var)) continue;
      const double w_target = clip(cfg.w_max * (1.0 - d_var / cfg.theta_w), cfg.w_max);
      p.amplitude += cfg.eta_w * (w_target - p.amplitude);
      ++report.w_moves;
    }
  }

  return report;
}

namespace detail {

inline int crystallization_pass(ParticlePopulation& pop, const EngineConfig& cfg) {
  int count = 0;
  for (Particle& p : pop.particles) {
    if (p.crystallized || p.update_count < cfg.n_cryst_min) continue;
    if (p.local_history.items.empty()) continue;
    if (std::abs(recent_mean(p.local_history, cfg.history_window)) >= cfg.theta_conv) continue;
    p.crystallized = true;
    p.decay_rate = cfg.mu_cryst;
    ++count;
  }
  return count;
}

struct MergePlanEntry {
  double distance = 0.0;
  std::size_t a = 0, b = 0;
};

// Greedy same-context merge in ascending distance order; absorber is the
// particle with the larger update_count (ties: earlier insertion).
// Merge radius uses the larger of the two kernel widths.
inline int merge_pass(ParticlePopulation& pop, const EngineConfig& cfg, double amplitude_bound) {
  auto& ps = pop.particles;
  std::vector<MergePlanEntry> plan;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      if (ps[i].birth_context != ps[j].birth_context) continue;
      const double radius = cfg.merge_factor * std::max(ps[i].sigma, ps[j].sigma);
      const double d2 = squared_distance(ps[i].location, ps[j].location);
      if (d2 < radius * radius) plan.push_back({std::sqrt(d2), i, j});
    }
  }
  std::sort(plan.begin(), plan.end(), [](const MergePlanEntry& x, const MergePlanEntry& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::vector<bool> absorbed(ps.size(), false);
  int merges = 0;
  for (const auto& e : plan) {
    if (absorbed[e.a] || absorbed[e.b]) continue;
    std::size_t keep = e.a, drop = e.b;
    if (ps[drop].update_count > ps[keep].update_count) std::swap(keep, drop);
    Particle& k = ps[keep];
    Particle& d = ps[drop];

    k.amplitude = clip(k.amplitude + d.amplitude, amplitude_bound);
    k.update_count += d.update_count;
    k.cross_count += d.cross_count;

    auto concat_truncate = [&](History& into, const History& from) {
      std::deque<double> merged(from.items.begin(), from.items.end());
      merged.insert(merged.end(), into.items.begin(), into.items.end());
      while (merged.size() > static_cast<std::size_t>(cfg.history_window)) merged.pop_front();
      into.items = std::move(merged);
    };
    concat_truncate(k.local_history, d.local_history);
    concat_truncate(k.cross_history, d.cross_history);

    k.decay_rate = std::min(k.decay_rate, d.decay_rate);
    k.crystallized = k.crystallized || d.crystallized;
    k.verified = k.verified && d.verified;
    absorbed[drop] = true;
    ++merges;
  }

  if (merges > 0) {
    std::vector<Particle> survivors;
    survivors.reserve(ps.size() - static_cast<std::size_t>(merges));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (!absorbed[i]) survivors.push_back(std::move(ps[i]));
    }
    ps = std::move(survivors);
  }
  return merges;
}

// Keeps all crystallized particles, then the strongest transients by
// (update_count desc, insertion index asc); preserves insertion order.
inline int capacity_pass(ParticlePopulation& pop) {
  auto& ps = pop.particles;
  if (pop.capacity == 0 || ps.size() <= pop.capacity) return 0;
  std::size_t crystal_count = 0;
  for (const Particle& p : ps) {
    if (p.crystallized) ++crystal_count;
  }
  std::vector<std::size_t> transient_idx;
  transient_idx.reserve(ps.size() - crystal_count);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!ps[i].crystallized) transient_idx.push_back(i);
  }
  std::stable_sort(transient_idx.begin(), transient_idx.end(), [&](std::size_t a, std::size_t b) {
    return ps[a].update_count > ps[b].update_count;
  });
  const std::size_t keep_transients = pop.capacity > crystal_count ? pop.capacity - crystal_count : 0;
  std::vector<bool> evict(ps.size(), false);
  for (std::size_t r = keep_transients; r < transient_idx.size(); ++r) evict[transient_idx[r]] = true;

  int evicted = 0;
  std::vector<Particle> survivors;
  survivors.reserve(std::min(ps.size(), pop.capacity));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (evict[i]) {
      ++evicted;
    } else {
      survivors.push_back(std::move(ps[i]));
    }
  }
  ps = std::move(survivors);
  return evicted;
}

}  // namespace detail

/*
 * End-of-epoch maintenance, in this exact order:
 *   1. decay        both channels
 *   2. crystallize  both channels, each on its own book
 *   3. Crucible     value channel drives the verdict, the index-paired
 *                   responsiveness particle inherits it; dissolution clears
 *                   both books of contradiction state plus the local book
 *                   (re-crystallization must be re-earned with fresh
 *                   same-context evidence, not stale history)
 *   4. merge + capacity, per channel
 * Populations must be index-paired (co-nucleated, as write_step maintains).
 */
inline LifecycleReport lifecycle_epoch(ParticlePopulation& value_pop, ParticlePopulation& resp_pop,
                                       const EngineConfig& cfg, const EngineMode& mode = {}) {
  if (value_pop.channel != Channel::value || resp_pop.channel != Channel::responsiveness)
    throw std::invalid_argument("lifecycle_epoch: populations must be (value, responsiveness)");
  if (value_pop.particles.size() != resp_pop.particles.size())
    throw std::invalid_argument("lifecycle_epoch: populations are not index-paired");

  LifecycleReport report;

  for (Particle& p : value_pop.particles) p.amplitude *= (1.0 - p.decay_rate);
  for (Particle& p : resp_pop.particles) p.amplitude *= (1.0 - p.decay_rate);
  report.decayed = static_cast<int>(value_pop.particles.size());

  if (mode.crystallization) {
    report.crystallized = detail::crystallization_pass(value_pop, cfg);
    detail::crystallization_pass(resp_pop, cfg);
  }

  if (mode.crucible) {
    for (std::size_t i = 0; i < value_pop.particles.size(); ++i) {
      Particle& v = value_pop.particles[i];
      Particle& w = resp_pop.particles[i];
      if (!v.crystallized || v.cross_count < cfg.n_cross_min) continue;
      const double cross_mean = recent_mean(v.cross_history, cfg.history_window);
      if (v.amplitude * cross_mean < cfg.theta_rev) {
        for (Particle* p : {&v, &w}) {
          p->decay_rate = cfg.mu_base;
          p->crystallized = false;
          p->verified = false;
          p->cross_history.clear();
          p->cross_count = 0;
          p->local_history.clear();
        }
        ++report.dissolved;
      } else if (v.cross_count >= cfg.n_verify) {
        if (!v.verified) ++report.verified_granted;
        v.verified = true;
        w.verified = w.crystallized;
      }
    }
  }

  report.merged = detail::merge_pass(value_pop, cfg, cfg.v_max);
  detail::merge_pass(resp_pop, cfg, cfg.w_max);
  report.evicted = detail::capacity_pass(value_pop);
  detail::capacity_pass(resp_pop);

  return report;
}

struct CensusSnapshot {
  std::size_t total = 0;
  std::size_t crystallized = 0;
  std::size_t verified = 0;
  std::vector<std::size_t> crystallized_by_birth;  // indexed by birth_context
};

// Owns one paired (value, responsiveness) population set.
class Engine {
 public:
  explicit Engine(EngineConfig cfg, EngineMode mode = {}) : cfg_(cfg), mode_(mode) {
    cfg_.validate();
    value_.channel = Channel::value;
    resp_.channel = Channel::responsiveness;
    value_.capacity = cfg_.capacity;
    resp_.capacity = cfg_.capacity;
  }

  double read_value_at(const LatentPoint& z, int ctx) const { return ibf::read_value(value_, z, ctx); }
  double read_responsiveness_at(const LatentPoint& z, int ctx) const {
    return ibf::read_responsiveness(resp_, z, ctx);
  }

  double effective_k(const LatentPoint& z, int ctx) const {
    if (!mode_.agency) return cfg_.k0;
    return effective_responsiveness(cfg_, read_responsiveness_at(z, ctx));
  }

  WriteReport write(const LatentPoint& visited, int ctx, double discrepancy) {
    if (!mode_.writes) return {};
    return write_step(value_, resp_, visited, ctx, discrepancy, cfg_, mode_);
  }

  LifecycleReport epoch() { return lifecycle_epoch(value_, resp_, cfg_, mode_); }

  // Phase-boundary hook: verification is phase-local.
  void reset_verification() {
    for (Particle& p : value_.particles) p.verified = false;
    for (Particle& p : resp_.particles) p.verified = false;
  }

  CensusSnapshot census(int context_count) const {
    CensusSnapshot snap;
    snap.total = value_.particles.size();
    snap.crystallized_by_birth.assign(static_cast<std::size_t>(context_count), 0);
    for (const Particle& p : value_.particles) {
      if (p.crystallized) {
        ++snap.crystallized;
        if (p.birth_context >= 0 && p.birth_context < context_count)
          ++snap.crystallized_by_birth[static_cast<std::size_t>(p.birth_context)];
      }
      if (p.verified) ++snap.verified;
    }
    return snap;
  }

  const ParticlePopulation& values() const { return value_; }
  const ParticlePopulation& responsiveness() const { return resp_; }
  const EngineConfig& config() const { return cfg_; }
  const EngineMode& mode() const { return mode_; }

 private:
  EngineConfig cfg_;
  EngineMode mode_;
  ParticlePopulation value_;
  ParticlePopulation resp_;
};

}  // namespace ibf
