#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ibf/calibration.hpp"
#include "ibf/config.hpp"
#include "ibf/engine.hpp"
#include "ibf/policy.hpp"
#include "ibf/report.hpp"
#include "ibf/rng.hpp"
#include "ibf/svg.hpp"

namespace ibf {

// Two-context planar environment. Context A is 0, context B is 1; the
// contextual term flips sign between them while the x1 term never changes.
struct ToyConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double u_a = 1.0;  // context B uses -u_a
  std::array<double, 2> p{{1.0, -1.0}};
  std::array<double, 2> r{{1.0, -1.0}};
  int epochs_per_phase = 25;
  int interactions_per_epoch = 200;
  int actions = 2;
  double base_score = 0.5;
  double kappa = 0.45;        // bandwidth transplant ratio
  double theta_create = 0.065;  // engine default here: sized so both engines together nucleate ~25 sites per phase
  int eval_states = 2000;
  int probe_grid = 31;
  int snapshot_grid = 60;
};

inline double toy_context_sign(const ToyConfig& cfg, int context) {
  return context == 0 ? cfg.u_a : -cfg.u_a;
}

inline double toy_score(const LatentPoint& x, int context, int j, const ToyConfig& cfg) {
  const std::size_t a = static_cast<std::size_t>(j);
  return cfg.beta * x[0] * cfg.p[a] + cfg.alpha * toy_context_sign(cfg, context) * x[1] * cfg.r[a];
}

inline int toy_correct_action(const LatentPoint& x, int context, const ToyConfig& cfg) {
  return toy_score(x, context, 1, cfg) > toy_score(x, context, 0, cfg) ? 1 : 0;
}

inline double toy_imposed_reward(int chosen, int correct) { return chosen == correct ? 1.0 : 0.0; }

inline bool toy_apply_override(ToyConfig& cfg, const std::string& key, double value) {
  if (key == "alpha") cfg.alpha = value;
  else if (key == "beta") cfg.beta = value;
  else if (key == "u_a") cfg.u_a = value;
  else if (key == "base_score") cfg.base_score = value;
  else if (key == "kappa") cfg.kappa = value;
  else if (key == "epochs_per_phase") cfg.epochs_per_phase = static_cast<int>(value);
  else if (key == "interactions_per_epoch") cfg.interactions_per_epoch = static_cast<int>(value);
  else if (key == "eval_states") cfg.eval_states = static_cast<int>(value);
  else return false;
  return true;
}

// The two toy action candidates share the state latent, so the bleed rule has
// no sibling distance to work with; sigma comes from the kappa ratio instead.
inline CalibrationResult toy_calibration(const ToyConfig& cfg, int sample_count = 5000) {
  Rng rng(stable_hash64("toy/calibration"));
  std::vector<LatentPoint> samples(static_cast<std::size_t>(sample_count), LatentPoint(2, 0.0));
  for (auto& s : samples) rng.fill_normal(s, 2);
  CalibrationResult r;
  r.d_eff = participation_ratio(covariance_spectrum(samples));
  r.sibling_distance_median = 0.0;
  r.sigma_star = cfg.kappa * std::sqrt(r.d_eff);
  r.kappa = r.sigma_star / std::sqrt(r.d_eff);
  r.epsilon_bleed = 0.0;
  return r;
}

struct ToyRunResult {
  ExperimentReport report;
  std::vector<LandscapeSnapshot> snapshots;
};

inline ToyRunResult run_toy(const std::string& condition, std::uint64_t seed,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {},
                            bool want_snapshots = false) {
  const EngineMode mode = condition_mode(condition);

  ToyConfig tc;
  std::vector<std::pair<std::string, std::string>> engine_kv;
  for (const auto& [key, raw] : overrides) {
    EngineConfig probe;
    if (apply_override(probe, key, raw)) engine_kv.emplace_back(key, raw);
    else if (!toy_apply_override(tc, key, std::stod(raw))) throw std::invalid_argument("unknown config key: " + key);
  }

  const CalibrationResult cal = toy_calibration(tc);
  EngineConfig ec;
  ec.theta_create = tc.theta_create;
  ec.sigma_star = cal.sigma_star;
  for (const auto& [key, raw] : engine_kv) apply_override(ec, key, raw);
  ec.validate();

  std::vector<Engine> engines;
  engines.reserve(static_cast<std::size_t>(tc.actions));
  for (int j = 0; j < tc.actions; ++j) engines.emplace_back(ec, mode);

  Rng rng_train(stable_hash64("toy", condition + "/train", seed));

  const int phases = 2;
  std::vector<std::vector<LatentPoint>> eval_states(static_cast<std::size_t>(phases));
  for (int c = 0; c < phases; ++c) {
    Rng rng_eval(stable_hash64("toy", "eval/" + std::to_string(c), seed));
    auto& states = eval_states[static_cast<std::size_t>(c)];
    states.assign(static_cast<std::size_t>(tc.eval_states), LatentPoint(2, 0.0));
    for (auto& s : states) rng_eval.fill_normal(s, 2);
  }

  auto score_candidates = [&](const LatentPoint& x, int ctx) {
    std::vector<ActionCandidate> cands;
    cands.reserve(engines.size());
    for (int j = 0; j < tc.actions; ++j) {
      const double s = tc.base_score + engines[static_cast<std::size_t>(j)].read_value_at(x, ctx);
      cands.push_back({j, x, s});
    }
    return cands;
  };
  auto effective_k_at = [&](const LatentPoint& x, int ctx) {
    if (!mode.agency) return ec.k0;
    std::vector<const ParticlePopulation*> pops;
    pops.reserve(engines.size());
    for (const Engine& e : engines) pops.push_back(&e.responsiveness());
    return effective_responsiveness(ec, read_responsiveness(pops, x, ctx));
  };
  auto eval_accuracy = [&](int ctx) {
    const auto& states = eval_states[static_cast<std::size_t>(ctx)];
    long correct = 0;
    for (const LatentPoint& x : states) {
      const auto cands = score_candidates(x, ctx);
      if (greedy_action(cands) == toy_correct_action(x, ctx, tc)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(states.size());
  };

  ExperimentReport rep;
  rep.domain = "toy";
  rep.condition = condition;
  rep.seed = seed;
  rep.config = ec;
  rep.calibration_method = "kappa_transplant";
  rep.calibration = cal;
  rep.phase_count = phases;
  rep.context_count = phases;
  rep.domain_config = ordered_json{{"alpha", tc.alpha},
                                   {"beta", tc.beta},
                                   {"u_a", tc.u_a},
                                   {"u_b", -tc.u_a},
                                   {"p", tc.p},
                                   {"r", tc.r},
                                   {"epochs_per_phase", tc.epochs_per_phase},
                                   {"interactions_per_epoch", tc.interactions_per_epoch},
                                   {"actions", tc.actions},
                                   {"base_score", tc.base_score},
                                   {"kappa", tc.kappa},
                                   {"eval_states", tc.eval_states}};
  rep.accuracy_end_of_phase.assign(static_cast<std::size_t>(phases), std::vector<double>(static_cast<std::size_t>(phases), 0.0));

  ToyRunResult result;
  double min_epoch_var = std::numeric_limits<double>::infinity();
  double max_abs_d = 0.0;
  long dissolved_in_b = 0;
  long dissolved_mid_b = 0;
  long survivors_mid_b = 0;
  std::vector<double> dvals;
  dvals.reserve(static_cast<std::size_t>(tc.interactions_per_epoch));
  int global_epoch = 0;

  for (int phase = 0; phase < phases; ++phase) {
    if (phase > 0)
      for (Engine& e : engines) e.reset_verification();
    for (int epoch = 0; epoch < tc.epochs_per_phase; ++epoch) {
      CensusRow row;
      row.epoch = global_epoch;
      row.phase = phase;
      dvals.clear();
      for (int it = 0; it < tc.interactions_per_epoch; ++it) {
        LatentPoint x(2, 0.0);
        rng_train.fill_normal(x, 2);
        const int correct = toy_correct_action(x, phase, tc);
        const auto cands = score_candidates(x, phase);
        const double k = effective_k_at(x, phase);
        const int chosen = select_action(cands, k, rng_train).action_id;
        const double imposed = toy_imposed_reward(chosen, correct);
        const double d = imposed - cands[static_cast<std::size_t>(chosen)].score_eff;
        dvals.push_back(d);
        max_abs_d = std::max(max_abs_d, std::fabs(d));
        row.nucleations += engines[static_cast<std::size_t>(chosen)].write(x, phase, d).nucleations;
      }
      for (Engine& e : engines) {
        const LifecycleReport lr = e.epoch();
        row.crystallized_events += lr.crystallized;
        row.dissolved_events += lr.dissolved;
        row.verified_grants += lr.verified_granted;
        row.merges += lr.merged;
        row.evictions += lr.evicted;
      }
      std::vector<long> by_birth(static_cast<std::size_t>(phases), 0);
      for (const Engine& e : engines) {
        const CensusSnapshot snap = e.census(phases);
        row.population_total += static_cast<long>(snap.total);
        row.population_crystallized += static_cast<long>(snap.crystallized);
        row.population_verified += static_cast<long>(snap.verified);
        for (std::size_t c = 0; c < by_birth.size(); ++c) by_birth[c] += static_cast<long>(snap.crystallized_by_birth[c]);
      }
      row.crystallized_by_birth = by_birth;
      row.discrepancy_variance = detail::population_variance(dvals);
      min_epoch_var = std::min(min_epoch_var, row.discrepancy_variance);
      if (phase == 1) {
        dissolved_in_b += row.dissolved_events;
        if (epoch == tc.epochs_per_phase / 2) {
          dissolved_mid_b = dissolved_in_b;
          survivors_mid_b = by_birth[0];
        }
      }
      if (want_snapshots) {
        LandscapeSnapshot snap;
        snap.epoch = global_epoch;
        snap.phase = phase;
        snap.grid_n = tc.snapshot_grid;
        snap.values.resize(static_cast<std::size_t>(snap.grid_n) * static_cast<std::size_t>(snap.grid_n));
        const double step = (snap.hi - snap.lo) / static_cast<double>(snap.grid_n);
        for (int iy = 0; iy < snap.grid_n; ++iy) {
          const double y = snap.hi - (iy + 0.5) * step;
          for (int ix = 0; ix < snap.grid_n; ++ix) {
            const double x0 = snap.lo + (ix + 0.5) * step;
            const LatentPoint z{x0, y};
            snap.values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(snap.grid_n) + static_cast<std::size_t>(ix)] =
                engines[0].read_value_at(z, phase) - engines[1].read_value_at(z, phase);
          }
        }
        for (const Engine& e : engines) {
          for (const Particle& p : e.values().particles) {
            ParticleMarker m;
            m.x = p.location[0];
            m.y = p.location[1];
            if (!read_gate(p, phase)) m.state = MarkerState::gated_off;
            else m.state = p.crystallized ? MarkerState::crystallized : MarkerState::transient;
            snap.markers.push_back(m);
          }
        }
        result.snapshots.push_back(std::move(snap));
      }
      rep.census.push_back(std::move(row));
      ++global_epoch;
    }
    for (int c = 0; c < phases; ++c)
      rep.accuracy_end_of_phase[static_cast<std::size_t>(phase)][static_cast<std::size_t>(c)] = eval_accuracy(c);
  }

  rep.accuracy_a_initial = rep.accuracy_end_of_phase[0][0];
  rep.accuracy_a_final = rep.accuracy_end_of_phase[static_cast<std::size_t>(phases - 1)][0];
  rep.backward_transfer_a = rep.accuracy_a_final - rep.accuracy_a_initial;
  rep.min_epoch_discrepancy_variance = min_epoch_var;
  rep.max_abs_discrepancy = max_abs_d;

  {
    KSummary ks;
    ks.min = std::numeric_limits<double>::infinity();
    ks.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    const int n = tc.probe_grid;
    const double lo = -3.0, hi = 3.0;
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const LatentPoint z{lo + (hi - lo) * ix / (n - 1), lo + (hi - lo) * iy / (n - 1)};
        const double k = effective_k_at(z, phases - 1);
        ks.min = std::min(ks.min, k);
        ks.max = std::max(ks.max, k);
        sum += k;
      }
    }
    ks.mean = sum / static_cast<double>(n) / static_cast<double>(n);
    rep.k_eff = ks;
  }

  rep.extras = ordered_json{{"dissolved_phase_b_mid", dissolved_mid_b},
                            {"survivors_phase_b_mid", survivors_mid_b},
                            {"dissolved_phase_b_total", dissolved_in_b}};
  result.report = std::move(rep);
  return result;
}

}  // namespace ibf
