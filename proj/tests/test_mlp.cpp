#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ibf/mlp.hpp"
#include "ibf/rng.hpp"

namespace {

double model_loss(const ibf::MlpModel& m, const std::vector<double>& z, double target) {
  const double g = ibf::mlp_forward(m, z) - target;
  return 0.5 * g * g;
}

double& param_ref(ibf::MlpModel& m, std::size_t index) {
  if (index < m.w1.size()) return m.w1[index];
  index -= m.w1.size();
  if (index < m.b1.size()) return m.b1[index];
  index -= m.b1.size();
  if (index < m.w2.size()) return m.w2[index];
  return m.b2;
}

TEST(Mlp, ParameterCountAndDeterministicInit) {
  ibf::Rng rng(42);
  ibf::MlpModel m(8, 64, 0.05, rng);
  EXPECT_EQ(m.parameter_count(), 641u);  // 512 + 64 + 64 + 1
  for (double b : m.b1) EXPECT_DOUBLE_EQ(b, 0.0);
  EXPECT_DOUBLE_EQ(m.b2, 0.0);

  ibf::Rng rng2(42);
  ibf::MlpModel m2(8, 64, 0.05, rng2);
  EXPECT_EQ(m.w1, m2.w1);
  EXPECT_EQ(m.w2, m2.w2);

  ibf::Rng rng3(43);
  ibf::MlpModel m3(8, 64, 0.05, rng3);
  EXPECT_NE(m.w1, m3.w1);
}

TEST(Mlp, CtorRejectsBadArguments) {
  ibf::Rng rng(1);
  EXPECT_THROW(ibf::MlpModel(0, 4, 0.1, rng), std::invalid_argument);
  EXPECT_THROW(ibf::MlpModel(4, 0, 0.1, rng), std::invalid_argument);
  EXPECT_THROW(ibf::MlpModel(4, 4, -0.1, rng), std::invalid_argument);
}

TEST(Mlp, ZeroedNetworkOutputsItsBias) {
  ibf::Rng rng(7);
  ibf::MlpModel m(3, 5, 0.1, rng);
  for (double& w : m.w1) w = 0.0;
  for (double& w : m.w2) w = 0.0;
  m.b2 = 1.25;
  EXPECT_DOUBLE_EQ(ibf::mlp_forward(m, {4.0, -2.0, 9.0}), 1.25);
  EXPECT_THROW(ibf::mlp_forward(m, {1.0}), std::invalid_argument);
}

TEST(Mlp, TrainStepReturnsPreStepLossAndRejectsBadTargets) {
  ibf::Rng rng(9);
  ibf::MlpModel m(4, 8, 0.05, rng);
  const std::vector<double> z{0.5, -0.3, 1.2, 0.01};
  const double before = model_loss(m, z, 0.8);
  const double reported = ibf::mlp_train_step(m, z, 0.8);
  EXPECT_DOUBLE_EQ(reported, before);
  EXPECT_LT(model_loss(m, z, 0.8), before);
  EXPECT_THROW(ibf::mlp_train_step(m, z, std::nan("")), std::invalid_argument);
  EXPECT_THROW(ibf::mlp_train_step(m, {1.0}, 0.5), std::invalid_argument);
}

TEST(Mlp, NoOpWhenTargetMatchesOrRateIsZero) {
  ibf::Rng rng(12);
  ibf::MlpModel m(4, 8, 0.05, rng);
  const std::vector<double> z{0.3, 0.9, -1.1, 0.4};
  const double out = ibf::mlp_forward(m, z);

  ibf::MlpModel hit = m;
  EXPECT_DOUBLE_EQ(ibf::mlp_train_step(hit, z, out), 0.0);
  EXPECT_EQ(hit.w1, m.w1);
  EXPECT_EQ(hit.b1, m.b1);
  EXPECT_EQ(hit.w2, m.w2);
  EXPECT_DOUBLE_EQ(hit.b2, m.b2);

  ibf::MlpModel frozen = m;
  frozen.learning_rate = 0.0;
  ibf::mlp_train_step(frozen, z, out + 3.0);
  EXPECT_EQ(frozen.w1, m.w1);
  EXPECT_DOUBLE_EQ(frozen.b2, m.b2);
}

TEST(Mlp, BackpropMatchesFiniteDifferences) {
  ibf::Rng rng(20260825);
  ibf::MlpModel m(8, 64, 0.05, rng);
  std::vector<double> z;
  rng.fill_normal(z, 8);
  const double target = 0.7;

  // analytic gradient recovered from one SGD step: g_i = (theta_i - theta_i') / lr
  ibf::MlpModel stepped = m;
  ibf::mlp_train_step(stepped, z, target);

  const std::size_t total = m.parameter_count();
  const double h = 1e-5;
  ibf::Rng pick(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t index = pick.uniform_int(total);
    ibf::MlpModel base = m;
    const double analytic = (param_ref(base, index) - param_ref(stepped, index)) / m.learning_rate;

    ibf::MlpModel plus = m, minus = m;
    param_ref(plus, index) += h;
    param_ref(minus, index) -= h;
    const double fd = (model_loss(plus, z, target) - model_loss(minus, z, target)) / (2.0 * h);

    const double scale = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    EXPECT_LE(std::fabs(analytic - fd), 1e-4 * scale) << "parameter " << index;
  }
}

TEST(Mlp, RepeatedStepsConverge) {
  ibf::Rng rng(5);
  ibf::MlpModel m(8, 16, 0.01, rng);
  std::vector<double> z;
  rng.fill_normal(z, 8);
  double prev = model_loss(m, z, 1.5);
  const double initial = prev;
  for (int i = 0; i < 200; ++i) {
    const double loss = ibf::mlp_train_step(m, z, 1.5);
    EXPECT_LE(loss, prev + 1e-12);
    prev = loss;
  }
  EXPECT_LT(model_loss(m, z, 1.5), 1e-3 * initial);
}

TEST(Replay, BufferIsBoundedByCapacity) {
  ibf::ReplayBuffer buffer;
  ibf::Rng rng(16);
  for (int i = 0; i < 100000; ++i) buffer.insert({static_cast<double>(i)}, 0.0, rng);
  EXPECT_EQ(buffer.entries.size(), 50u);
  EXPECT_EQ(buffer.stream_count, 100000u);
}

TEST(Replay, EmptyBufferStepEqualsPlainStep) {
  ibf::Rng rng(31);
  ibf::MlpModel a(4, 8, 0.05, rng);
  ibf::MlpModel b = a;
  const std::vector<double> z{0.2, -0.8, 0.5, 1.0};

  ibf::ReplayBuffer buffer;
  ibf::Rng aux(77);
  const double loss_a = ibf::replay_train_step(a, buffer, z, 0.4, aux);
  const double loss_b = ibf::mlp_train_step(b, z, 0.4);

  EXPECT_DOUBLE_EQ(loss_a, loss_b);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.b1, b.b1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_DOUBLE_EQ(a.b2, b.b2);
  EXPECT_EQ(buffer.entries.size(), 1u);  // the fresh sample lands after the step
}

TEST(Replay, StepDrawsFromBufferBeforeInserting) {
  ibf::Rng rng(8);
  ibf::MlpModel m(1, 4, 0.05, rng);
  ibf::ReplayBuffer buffer;
  buffer.capacity = 1;
  ibf::Rng aux(3);
  ibf::replay_train_step(m, buffer, {1.0}, 0.0, aux);
  ASSERT_EQ(buffer.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(buffer.entries[0].latent[0], 1.0);

  // the second step must replay the first sample, not the incoming one;
  // verify via a model clone trained on the known sequence
  ibf::MlpModel clone = m;
  ibf::mlp_train_step(clone, {2.0}, 0.5);   // fresh
  ibf::mlp_train_step(clone, {1.0}, 0.0);   // replay of the only buffered entry
  ibf::replay_train_step(m, buffer, {2.0}, 0.5, aux);
  EXPECT_EQ(m.w1, clone.w1);
  EXPECT_DOUBLE_EQ(m.b2, clone.b2);
  // afterwards the reservoir may hold either sample; the stream count advances
  EXPECT_EQ(buffer.stream_count, 2u);
}

TEST(Replay, ReservoirIsUniformOverTheStream) {
  const int stream = 500;
  const int reps = 400;
  const int bins = 5;
  std::vector<long> counts(bins, 0);
  for (int rep = 0; rep < reps; ++rep) {
    ibf::ReplayBuffer buffer;
    ibf::Rng rng(static_cast<std::uint64_t>(1000 + rep));
    for (int i = 0; i < stream; ++i) buffer.insert({static_cast<double>(i)}, 0.0, rng);
    for (const auto& e : buffer.entries) {
      const int idx = static_cast<int>(e.latent[0]);
      ++counts[static_cast<std::size_t>(idx * bins / stream)];
    }
  }
  const double expected = static_cast<double>(reps) * 50.0 / bins;  // 4000 per bin
  double chi2 = 0.0;
  for (long c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  // dof 4: 18.47 at the 99.9th percentile; generous headroom against rng luck
  EXPECT_LT(chi2, 25.0);
}

}  // namespace
