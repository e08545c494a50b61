#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ibf/rng.hpp"

namespace ibf {

// Two-layer scorer: affine(in->hidden), rectifier, affine(hidden->1).
struct MlpModel {
  std::size_t input_dim;
  std::size_t hidden_dim;
  double learning_rate;
  std::vector<double> w1;  // hidden x input, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2;

  MlpModel(std::size_t input, std::size_t hidden, double lr, Rng& rng)
      : input_dim(input), hidden_dim(hidden), learning_rate(lr),
        w1(hidden * input), b1(hidden, 0.0), w2(hidden), b2(0.0) {
    if (input == 0 || hidden == 0) throw std::invalid_argument("MlpModel: zero layer width");
    if (!(lr >= 0.0)) throw std::invalid_argument("MlpModel: negative learning rate");
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    rng.fill_normal(w1, w1.size());
    for (double& w : w1) w *= s1;
    rng.fill_normal(w2, w2.size());
    for (double& w : w2) w *= s2;
  }

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }
};

inline double mlp_forward(const MlpModel& m, const std::vector<double>& z) {
  if (z.size() != m.input_dim) throw std::invalid_argument("mlp_forward: input dimension mismatch");
  double out = m.b2;
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    double a = m.b1[h];
    const double* row = m.w1.data() + h * m.input_dim;
    for (std::size_t i = 0; i < m.input_dim; ++i) a += row[i] * z[i];
    if (a > 0.0) out += m.w2[h] * a;
  }
  return out;
}

// Residual magnitude beyond which the SGD step switches from squared to
// absolute error (Huber); keeps high learning rates finite.
inline constexpr double kResidualClip = 2.0;

// One SGD step on half squared error with the update residual clipped to
// +/- kResidualClip; returns the pre-step (unclipped) loss.
inline double mlp_train_step(MlpModel& m, const std::vector<double>& z, double target) {
  if (z.size() != m.input_dim) throw std::invalid_argument("mlp_train_step: input dimension mismatch");
  if (!std::isfinite(target)) throw std::invalid_argument("mlp_train_step: non-finite target");
  std::vector<double> act(m.hidden_dim);
  double out = m.b2;
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    double a = m.b1[h];
    const double* row = m.w1.data() + h * m.input_dim;
    for (std::size_t i = 0; i < m.input_dim; ++i) a += row[i] * z[i];
    act[h] = a;
    if (a > 0.0) out += m.w2[h] * a;
  }
  const double raw = out - target;
  const double g = std::clamp(raw, -kResidualClip, kResidualClip);
  const double lr = m.learning_rate;
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    if (act[h] <= 0.0) continue;
    const double gh = g * m.w2[h];
    m.w2[h] -= lr * g * act[h];
    m.b1[h] -= lr * gh;
    double* row = m.w1.data() + h * m.input_dim;
    for (std::size_t i = 0; i < m.input_dim; ++i) row[i] -= lr * gh * z[i];
  }
  m.b2 -= lr * g;
  return 0.5 * raw * raw;
}

struct ReplayEntry {
  std::vector<double> latent;
  double target;
};

// Reservoir of (latent, target) pairs; uniform over the stream once full.
struct ReplayBuffer {
  std::size_t capacity = 50;
  std::vector<ReplayEntry> entries;
  std::uint64_t stream_count = 0;

  void insert(const std::vector<double>& z, double target, Rng& rng) {
    ++stream_count;
    if (entries.size() < capacity) {
      entries.push_back({z, target});
      return;
    }
    const std::uint64_t slot = rng.next_u64() % stream_count;
    if (slot < capacity) entries[static_cast<std::size_t>(slot)] = {z, target};
  }
};

// Fresh-sample step, then one step on a uniform buffer draw, then insert.
inline double replay_train_step(MlpModel& m, ReplayBuffer& buffer, const std::vector<double>& z,
                                double target, Rng& rng) {
  const double loss = mlp_train_step(m, z, target);
  if (!buffer.entries.empty()) {
    const auto& pick = buffer.entries[rng.uniform_int(buffer.entries.size())];
    mlp_train_step(m, pick.latent, pick.target);
  }
  buffer.insert(z, target, rng);
  return loss;
}

}  // namespace ibf
