#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ibf/geometry.hpp"
#include "ibf/rng.hpp"

namespace ibf {

struct ActionCandidate {
  int action_id = 0;
  LatentPoint latent;
  double score_eff = 0.0;
};

// Boltzmann probabilities exp(k*s_j) / sum, computed with max subtraction.
inline std::vector<double> boltzmann_probabilities(const std::vector<ActionCandidate>& candidates, double k_eff) {
  if (candidates.empty()) throw std::invalid_argument("boltzmann_probabilities: empty candidate list");
  if (!(k_eff > 0.0) || !std::isfinite(k_eff)) throw std::invalid_argument("boltzmann_probabilities: k_eff must be positive");
  double best = candidates[0].score_eff;
  for (const auto& c : candidates) {
    if (!std::isfinite(c.score_eff)) throw std::invalid_argument("boltzmann_probabilities: non-finite score");
    best = std::max(best, c.score_eff);
  }
  std::vector<double> p(candidates.size());
  double z = 0.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    p[j] = std::exp(k_eff * (candidates[j].score_eff - best));
    z += p[j];
  }
  for (auto& v : p) v /= z;
  return p;
}

struct SelectionResult {
  int action_id = 0;
  std::vector<double> probabilities;
};

// Samples by inverse CDF on exactly one rng draw.
inline SelectionResult select_action(const std::vector<ActionCandidate>& candidates, double k_eff, Rng& rng) {
  SelectionResult result;
  result.probabilities = boltzmann_probabilities(candidates, k_eff);
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = candidates.size() - 1;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    cum += result.probabilities[j];
    if (u < cum) {
      pick = j;
      break;
    }
  }
  result.action_id = candidates[pick].action_id;
  return result;
}

// Deterministic evaluation mode: argmax of score, ties to the lowest action id.
inline int greedy_action(const std::vector<ActionCandidate>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("greedy_action: empty candidate list");
  const ActionCandidate* best = &candidates[0];
  for (const auto& c : candidates) {
    if (c.score_eff > best->score_eff ||
        (c.score_eff == best->score_eff && c.action_id < best->action_id)) {
      best = &c;
    }
  }
  return best->action_id;
}

}  // namespace ibf
