#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ibf/engine.hpp"
#include "ibf/geometry.hpp"
#include "ibf/rng.hpp"

namespace ibf {

struct CalibrationResult {
  double d_eff = 0.0;
  double sibling_distance_median = 0.0;
  double sigma_star = 0.0;
  double kappa = 0.0;
  double epsilon_bleed = 0.0;
};

// Pairwise distances between the action-augmented latents of each state.
inline std::vector<double> sibling_distances(
    const std::vector<std::vector<double>>& states,
    const std::function<LatentPoint(const std::vector<double>&, int)>& embed,
    int actions_per_state) {
  if (states.empty()) throw std::invalid_argument("sibling_distances: need at least one state");
  if (actions_per_state < 2) {
    if (actions_per_state == 1) return {};
    throw std::invalid_argument("sibling_distances: need at least one action");
  }
  std::vector<double> out;
  out.reserve(states.size() * static_cast<std::size_t>(actions_per_state * (actions_per_state - 1) / 2));
  std::size_t dim = 0;
  for (const auto& s : states) {
    std::vector<LatentPoint> zs;
    zs.reserve(static_cast<std::size_t>(actions_per_state));
    for (int j = 0; j < actions_per_state; ++j) {
      zs.push_back(embed(s, j));
      if (dim == 0) dim = zs.back().size();
      if (zs.back().size() != dim) throw std::invalid_argument("sibling_distances: encoder dimension inconsistency");
    }
    for (int j = 0; j < actions_per_state; ++j)
      for (int m = j + 1; m < actions_per_state; ++m)
        out.push_back(std::sqrt(squared_distance(zs[static_cast<std::size_t>(j)], zs[static_cast<std::size_t>(m)])));
  }
  return out;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Bandwidth from geometry alone: sigma* inverts the kernel at the median
// sibling distance so that K(d_med; sigma*) == epsilon_bleed.
inline CalibrationResult calibrate_sigma(const std::vector<LatentPoint>& samples,
                                         const std::vector<double>& sibling_dists,
                                         double epsilon_bleed) {
  if (samples.empty() || sibling_dists.empty()) throw std::invalid_argument("calibrate_sigma: empty input");
  if (!(epsilon_bleed > 0.0 && epsilon_bleed < 1.0)) throw std::invalid_argument("calibrate_sigma: epsilon_bleed must be in (0,1)");
  CalibrationResult r;
  r.epsilon_bleed = epsilon_bleed;
  r.d_eff = participation_ratio(covariance_spectrum(samples));
  r.sibling_distance_median = median(sibling_dists);
  if (!(r.sibling_distance_median > 0.0)) throw std::runtime_error("calibrate_sigma: degenerate geometry (zero sibling distance)");
  r.sigma_star = r.sibling_distance_median / std::sqrt(2.0 * std::log(1.0 / epsilon_bleed));
  r.kappa = r.sigma_star / std::sqrt(r.d_eff);
  return r;
}

struct DiagnosticsReport {
  double evaluator_std = 0.0;
  double evaluator_std_floor = 0.0;
  bool magnitude_pass = false;          // R' check
  double positive_increment_fraction = 0.0;
  double positive_increment_floor = 0.0;
  bool increment_pass = false;          // Condition A
  double merge_rate = 0.0;              // merges per nucleation in the probe run
  bool merge_rate_flagged = false;
};

struct ProbeStats {
  int merges = 0;
  int nucleations = 0;
};

// Seeds one site per latent at the probe bandwidth, then lets the lifecycle
// merge pass collapse whatever the kernel cannot tell apart. A rate near 1
// means the bandwidth is too coarse for the data's geometry.
inline ProbeStats probe_merge_rate(const std::vector<LatentPoint>& latents, double sigma, EngineConfig cfg) {
  if (latents.empty()) throw std::invalid_argument("probe_merge_rate: need latents");
  cfg.sigma_star = sigma;
  cfg.validate();
  ParticlePopulation value_pop, resp_pop;
  value_pop.channel = Channel::value;
  resp_pop.channel = Channel::responsiveness;
  value_pop.capacity = cfg.capacity;
  resp_pop.capacity = cfg.capacity;
  int sign = 1;
  for (const auto& z : latents) {
    value_pop.particles.push_back(make_particle(z, clip(cfg.eta_base * 0.4 * sign, cfg.v_max), cfg, 0));
    resp_pop.particles.push_back(make_particle(z, 0.0, cfg, 0));
    sign = -sign;
  }
  ProbeStats stats;
  stats.nucleations = static_cast<int>(latents.size());
  stats.merges = lifecycle_epoch(value_pop, resp_pop, cfg).merged;
  return stats;
}

/*
 * Discretization diagnostics:
 *   (a) magnitude: the base evaluator must spread over the sampled latents,
 *   (b) increments: enough states must offer an action whose candidate
 *       coherence exceeds the current-state coherence,
 *   (c) kernel resolution: merge rate from a probe run (near 1 merge per
 *       nucleation means the bandwidth cannot separate the data).
 */
inline DiagnosticsReport condition_checks(
    const std::function<double(const LatentPoint&)>& base_evaluator,
    const std::vector<LatentPoint>& sample_states,
    const std::function<std::vector<LatentPoint>(const LatentPoint&)>& candidates_fn,
    const ProbeStats& probe = {},
    double evaluator_std_floor = 0.05,
    double positive_increment_floor = 0.5,
    double merge_rate_flag_threshold = 0.5) {
  if (sample_states.empty()) throw std::invalid_argument("condition_checks: need sample states");
  DiagnosticsReport report;
  report.evaluator_std_floor = evaluator_std_floor;
  report.positive_increment_floor = positive_increment_floor;

  double mean = 0.0;
  std::vector<double> values;
  values.reserve(sample_states.size());
  for (const auto& z : sample_states) {
    values.push_back(base_evaluator(z));
    mean += values.back();
  }
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  report.evaluator_std = std::sqrt(var / static_cast<double>(values.size()));
  report.magnitude_pass = report.evaluator_std >= evaluator_std_floor;

  std::size_t positive = 0;
  for (const auto& z : sample_states) {
    const auto cands = candidates_fn(z);
    if (cands.empty()) continue;
    LatentPoint current(cands[0].size(), 0.0);
    for (const auto& c : cands)
      for (std::size_t i = 0; i < c.size(); ++i) current[i] += c[i] / static_cast<double>(cands.size());
    const double here = base_evaluator(current);
    for (const auto& c : cands) {
      if (base_evaluator(c) > here) {
        ++positive;
        break;
      }
    }
  }
  report.positive_increment_fraction = static_cast<double>(positive) / static_cast<double>(sample_states.size());
  report.increment_pass = report.positive_increment_fraction >= positive_increment_floor;

  report.merge_rate = probe.nucleations > 0 ? static_cast<double>(probe.merges) / static_cast<double>(probe.nucleations) : 0.0;
  report.merge_rate_flagged = report.merge_rate >= merge_rate_flag_threshold;
  return report;
}

}  // namespace ibf
