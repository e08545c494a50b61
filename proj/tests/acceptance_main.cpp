// Acceptance gate for the continual-learning engine. Each criterion prints a
// single PASS/FAIL line with its measured values; the process exits nonzero
// if any criterion fails. Tolerances are pinned here and nowhere else.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "ibf/harness.hpp"

namespace {

using ibf::ExperimentReport;

struct Gate {
  int failures = 0;

  void check(int n, const std::string& label, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n, label.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

struct Group {
  std::vector<ExperimentReport> reports;
  double seconds = 0.0;
  bool all_ok = true;

  std::vector<double> pull(double (*f)(const ExperimentReport&)) const {
    std::vector<double> out;
    out.reserve(reports.size());
    for (const auto& r : reports) out.push_back(f(r));
    return out;
  }
};

Group run_group(const std::string& domain, const std::string& condition, int seed_count) {
  std::vector<ibf::RunSpec> specs;
  specs.reserve(static_cast<std::size_t>(seed_count));
  for (int s = 0; s < seed_count; ++s)
    specs.push_back({domain, condition, static_cast<std::uint64_t>(s), {}, false});
  const auto t0 = std::chrono::steady_clock::now();
  const auto outs = ibf::run_matrix(specs, 1);
  Group g;
  g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& o : outs) {
    g.all_ok = g.all_ok && o.report.status == "ok";
    g.reports.push_back(o.report);
  }
  return g;
}

double get_bt(const ExperimentReport& r) { return r.backward_transfer_a; }
double get_acc_a(const ExperimentReport& r) { return r.accuracy_a_initial; }
double get_acc_last(const ExperimentReport& r) {
  const std::size_t last = r.accuracy_end_of_phase.size() - 1;
  return r.accuracy_end_of_phase[last][last];
}

constexpr int kSeeds = 5;

// ---------------------------------------------------------------------------
// Engine property block (criterion 10): self-contained re-statements of the
// core algebra, run against fresh random inputs on every invocation.

bool property_read_matches_brute_force(std::string& why) {
  ibf::Rng rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 2 + rng.uniform_int(3);
    ibf::ParticlePopulation pop;
    pop.channel = ibf::Channel::value;
    const std::size_t n = rng.uniform_int(31);
    for (std::size_t i = 0; i < n; ++i) {
      ibf::Particle p;
      p.location.resize(dim);
      rng.fill_normal(p.location, dim);
      double amp = 0.0, spare = 0.0;
      rng.normal_pair(amp, spare);
      p.amplitude = amp;
      p.sigma = 0.3 + rng.uniform();
      p.birth_context = static_cast<int>(rng.uniform_int(3));
      p.crystallized = rng.uniform() < 0.5;
      p.verified = p.crystallized && rng.uniform() < 0.5;
      pop.particles.push_back(std::move(p));
    }
    ibf::LatentPoint z(dim);
    rng.fill_normal(z, dim);
    const int ctx = static_cast<int>(rng.uniform_int(3));
    double expected = 0.0;
    for (const auto& p : pop.particles) {
      if (!(p.birth_context == ctx || (p.crystallized && p.verified))) continue;
      double d2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = z[i] - p.location[i];
        d2 += d * d;
      }
      expected += p.amplitude * std::exp(-d2 / (2.0 * p.sigma * p.sigma));
    }
    const double got = ibf::read_value(pop, z, ctx);
    if (std::fabs(got - expected) > 1e-12) {
      why = fmt("read mismatch %.17g vs %.17g", got, expected);
      return false;
    }
  }
  return true;
}

bool property_kernel_shape(std::string& why) {
  ibf::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    ibf::LatentPoint a(3), b(3);
    rng.fill_normal(a, 3);
    rng.fill_normal(b, 3);
    ibf::ParticlePopulation at_a;
    at_a.channel = ibf::Channel::value;
    ibf::Particle p;
    p.location = a;
    p.amplitude = 1.0;
    p.sigma = 0.8;
    p.birth_context = 0;
    at_a.particles.push_back(p);
    ibf::ParticlePopulation at_b = at_a;
    at_b.particles[0].location = b;
    if (ibf::read_value(at_a, b, 0) != ibf::read_value(at_b, a, 0)) {
      why = "kernel influence is not symmetric";
      return false;
    }
    double prev = ibf::read_value(at_a, a, 0);
    for (int step = 1; step <= 6; ++step) {
      ibf::LatentPoint z = a;
      z[0] += 0.5 * step;
      const double cur = ibf::read_value(at_a, z, 0);
      if (!(cur < prev)) {
        why = "kernel influence is not monotone in distance";
        return false;
      }
      prev = cur;
    }
  }
  return true;
}

bool property_gate_truth_table(std::string& why) {
  ibf::Particle p;
  p.birth_context = 0;
  const auto gate = [&p](bool cryst, bool verified, int ctx) {
    p.crystallized = cryst;
    p.verified = verified;
    return ibf::read_gate(p, ctx);
  };
  const bool ok = gate(false, false, 0) && gate(true, true, 0) && !gate(false, false, 1) &&
                  !gate(true, false, 1) && gate(true, true, 1);
  if (!ok) why = "context gate truth table violated";
  return ok;
}

bool property_bounds_and_books(std::string& why) {
  ibf::EngineConfig cfg;
  cfg.sigma_star = 1.0;
  ibf::Engine engine(cfg);
  ibf::Rng rng(5150);
  for (int i = 0; i < 10000; ++i) {
    ibf::LatentPoint z(2);
    rng.fill_normal(z, 2);
    const double d = 10.0 * (rng.uniform() - 0.5);
    engine.write(z, static_cast<int>(rng.uniform_int(2)), d);
    if (i % 50 == 49) engine.epoch();
  }
  const std::size_t local_cap =
      static_cast<std::size_t>(cfg.history_window) + static_cast<std::size_t>(cfg.transient_exclusion);
  const std::size_t cross_cap = static_cast<std::size_t>(cfg.history_window);
  const auto& vals = engine.values().particles;
  const auto& resp = engine.responsiveness().particles;
  if (vals.size() != resp.size()) {
    why = "value and responsiveness populations lost pairing";
    return false;
  }
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto& v = vals[i];
    const auto& w = resp[i];
    if (std::fabs(v.amplitude) > cfg.v_max || std::fabs(w.amplitude) > cfg.w_max) {
      why = fmt("amplitude escaped its bound at index %zu", i);
      return false;
    }
    if (v.local_history.size() > local_cap || v.cross_history.size() > cross_cap ||
        w.local_history.size() > local_cap || w.cross_history.size() > cross_cap) {
      why = "history book exceeded its cap";
      return false;
    }
    if (v.verified && !v.crystallized) {
      why = "verified flag on a non-crystallized particle";
      return false;
    }
    if (!(v.sigma > 0.0) || v.location.size() != 2) {
      why = "malformed particle geometry";
      return false;
    }
  }
  return true;
}

bool property_decay_bridging(std::string& why) {
  ibf::EngineConfig cfg;
  ibf::ParticlePopulation vals, resp;
  vals.channel = ibf::Channel::value;
  resp.channel = ibf::Channel::responsiveness;
  vals.particles.push_back(ibf::make_particle(ibf::LatentPoint{0.0, 0.0}, 0.8, cfg, 0));
  resp.particles.push_back(ibf::make_particle(ibf::LatentPoint{0.0, 0.0}, 0.25, cfg, 0));
  for (int k = 0; k < 10; ++k) ibf::lifecycle_epoch(vals, resp, cfg);
  const double expect_v = 0.8 * std::pow(1.0 - cfg.mu_base, 10);
  const double expect_w = 0.25 * std::pow(1.0 - cfg.mu_base, 10);
  if (std::fabs(vals.particles[0].amplitude - expect_v) > 1e-12 * expect_v ||
      std::fabs(resp.particles[0].amplitude - expect_w) > 1e-12) {
    why = fmt("decay bridge off: %.17g vs %.17g", vals.particles[0].amplitude, expect_v);
    return false;
  }
  return true;
}

bool property_policy_algebra(std::string& why) {
  ibf::Rng rng(88);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ibf::ActionCandidate> cands;
    const int n = 2 + static_cast<int>(rng.uniform_int(4));
    for (int j = 0; j < n; ++j) cands.push_back({j, {}, 2.0 * (rng.uniform() - 0.5)});
    const double k = 0.2 + 4.0 * rng.uniform();
    const auto p = ibf::boltzmann_probabilities(cands, k);
    double sum = 0.0;
    for (double v : p) sum += v;
    if (std::fabs(sum - 1.0) > 1e-12) {
      why = "probabilities do not normalize";
      return false;
    }
    auto shifted = cands;
    for (auto& c : shifted) c.score_eff += 17.25;
    const auto q = ibf::boltzmann_probabilities(shifted, k);
    for (int j = 0; j < n; ++j) {
      if (std::fabs(p[static_cast<std::size_t>(j)] - q[static_cast<std::size_t>(j)]) > 1e-12) {
        why = "probabilities are not shift invariant";
        return false;
      }
    }
  }
  std::vector<ibf::ActionCandidate> cands;
  for (int j = 0; j < 3; ++j) cands.push_back({j, {}, 0.3 * j});
  const auto probs = ibf::boltzmann_probabilities(cands, 2.0);
  std::array<long, 3> hits{};
  const int draws = 3000;
  for (int i = 0; i < draws; ++i) ++hits[static_cast<std::size_t>(ibf::select_action(cands, 2.0, rng).action_id)];
  for (int j = 0; j < 3; ++j) {
    const double expect = static_cast<double>(draws) * probs[static_cast<std::size_t>(j)];
    const double sd = std::sqrt(expect * (1.0 - probs[static_cast<std::size_t>(j)]));
    if (std::fabs(static_cast<double>(hits[static_cast<std::size_t>(j)]) - expect) > 3.5 * sd + 1.0) {
      why = fmt("sampling frequency for action %d drifted: %ld vs %.1f", j, hits[static_cast<std::size_t>(j)], expect);
      return false;
    }
  }
  return true;
}

bool mlp_gradients_match(std::string& why, double rel_tol) {
  ibf::Rng rng(12);
  ibf::MlpModel base(8, 64, 0.05, rng);
  ibf::LatentPoint z(8);
  rng.fill_normal(z, 8);
  const double target = 0.7;
  auto loss_at = [&](const ibf::MlpModel& m) {
    const double out = ibf::mlp_forward(m, z);
    return 0.5 * (out - target) * (out - target);
  };
  ibf::MlpModel stepped = base;
  ibf::mlp_train_step(stepped, z, target);

  auto param = [](ibf::MlpModel& m, std::size_t i) -> double* {
    if (i < m.w1.size()) return &m.w1[i];
    i -= m.w1.size();
    if (i < m.b1.size()) return &m.b1[i];
    i -= m.b1.size();
    if (i < m.w2.size()) return &m.w2[i];
    i -= m.w2.size();
    return &m.b2;
  };
  const std::size_t total = base.w1.size() + base.b1.size() + base.w2.size() + 1;
  const double h = 1e-5;
  for (int probe = 0; probe < 100; ++probe) {
    const std::size_t i = rng.uniform_int(total);
    ibf::MlpModel plus = base, minus = base;
    *param(plus, i) += h;
    *param(minus, i) -= h;
    const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    ibf::MlpModel b = base, s = stepped;
    const double analytic = (*param(b, i) - *param(s, i)) / base.learning_rate;
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
    if (std::fabs(fd - analytic) / denom > rel_tol) {
      why = fmt("gradient %zu: fd %.10g vs analytic %.10g", i, fd, analytic);
      return false;
    }
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> tiny_toy() {
  return {{"epochs_per_phase", "2"}, {"interactions_per_epoch", "40"}, {"eval_states", "200"}};
}

std::vector<std::pair<std::string, std::string>> tiny_rrw() {
  return {{"epochs_per_phase", "1"}, {"points_per_epoch", "60"}, {"eval_states", "100"}};
}

}  // namespace

int main() {
  Gate gate;

  // --- toy domain ---------------------------------------------------------
  const Group toy_passive = run_group("toy", "passive", kSeeds);
  {
    const double acc_a = mean(toy_passive.pull(get_acc_a));
    const double acc_b = mean(toy_passive.pull(get_acc_last));
    bool bt_zero = true;
    for (const auto& r : toy_passive.reports) bt_zero = bt_zero && r.backward_transfer_a == 0.0;
    const bool ok = toy_passive.all_ok && std::fabs(acc_a - 0.5) <= 0.03 && std::fabs(acc_b - 0.5) <= 0.03 &&
                    bt_zero && toy_passive.seconds < 10.0;
    gate.check(1, "toy passive stays at chance with exactly zero transfer",
               ok, fmt("acc_a=%.3f acc_b=%.3f bt_zero=%s %.1fs", acc_a, acc_b, bt_zero ? "yes" : "no", toy_passive.seconds));
  }

  const Group toy_nocru = run_group("toy", "no_crucible", kSeeds);
  {
    const double acc_a = mean(toy_nocru.pull(get_acc_a));
    const double abs_bt = mean([&] {
      std::vector<double> v;
      for (const auto& r : toy_nocru.reports) v.push_back(std::fabs(r.backward_transfer_a));
      return v;
    }());
    const bool ok = toy_nocru.all_ok && abs_bt <= 0.03 && acc_a >= 0.90 && toy_nocru.seconds < 30.0;
    gate.check(2, "toy without dissolution learns context A and keeps it",
               ok, fmt("acc_a=%.3f mean|bt|=%.3f %.1fs", acc_a, abs_bt, toy_nocru.seconds));
  }

  const Group toy_full = run_group("toy", "full", kSeeds);
  {
    const double acc_a = mean(toy_full.pull(get_acc_a));
    const double acc_b = mean(toy_full.pull(get_acc_last));
    const bool ok = toy_full.all_ok && acc_a >= 0.90 && acc_b >= 0.93;
    gate.check(3, "toy full engine masters both phases in sequence",
               ok, fmt("acc_a=%.3f acc_b=%.3f", acc_a, acc_b));
  }

  const Group toy_nocry = run_group("toy", "no_cryst", kSeeds);
  {
    const double bt_full = mean(toy_full.pull(get_bt));
    const double bt_nocry = mean(toy_nocry.pull(get_bt));
    const double bt_nocru = mean(toy_nocru.pull(get_bt));
    const bool ok = toy_nocry.all_ok && bt_nocru > bt_nocry && bt_nocry > bt_full && bt_full < -0.05;
    gate.check(4, "toy ablation ordering: dissolution drives backward transfer",
               ok, fmt("bt no_crucible=%.3f > no_cryst=%.3f > full=%.3f", bt_nocru, bt_nocry, bt_full));
  }

  {
    std::vector<double> dissolved, survivors;
    for (const auto& r : toy_full.reports) {
      dissolved.push_back(r.extras.at("dissolved_phase_b_mid").get<double>());
      survivors.push_back(r.extras.at("survivors_phase_b_mid").get<double>());
    }
    const double d_med = median(dissolved);
    const double s_med = median(survivors);
    const bool ok = toy_full.all_ok && d_med >= 2.0 && d_med <= 8.0 && s_med >= 10.0 && s_med <= 18.0;
    gate.check(5, "toy mid-phase-B census: selective dissolution, invariant survivors",
               ok, fmt("dissolved_med=%.0f survivors_med=%.0f", d_med, s_med));
  }

  // --- rotating rules world -----------------------------------------------
  const Group rrw_passive = run_group("rrw", "passive", kSeeds);
  const Group rrw_nocru = run_group("rrw", "no_crucible", kSeeds);
  {
    const double acc = mean(rrw_passive.pull(get_acc_a));
    bool bt_zero = true;
    for (const auto& r : rrw_passive.reports) bt_zero = bt_zero && r.backward_transfer_a == 0.0;
    const double abs_bt = mean([&] {
      std::vector<double> v;
      for (const auto& r : rrw_nocru.reports) v.push_back(std::fabs(r.backward_transfer_a));
      return v;
    }());
    const bool ok = rrw_passive.all_ok && rrw_nocru.all_ok && std::fabs(acc - 0.25) <= 0.02 && bt_zero &&
                    abs_bt <= 0.02 && rrw_passive.seconds < 300.0 && rrw_nocru.seconds < 300.0;
    gate.check(6, "rrw control conditions: chance floor and dissolution-free retention",
               ok, fmt("passive_acc=%.3f bt_zero=%s no_crucible|bt|=%.3f %.0fs+%.0fs", acc, bt_zero ? "yes" : "no",
                       abs_bt, rrw_passive.seconds, rrw_nocru.seconds));
  }

  const Group rrw_full = run_group("rrw", "full", kSeeds);
  const Group rrw_replay = run_group("rrw", "replay", kSeeds);
  const Group rrw_mlp = run_group("rrw", "mlp", kSeeds);
  {
    const double bt_full = mean(rrw_full.pull(get_bt));
    const double bt_replay = mean(rrw_replay.pull(get_bt));
    const double bt_mlp = mean(rrw_mlp.pull(get_bt));
    const double acc_full = mean(rrw_full.pull(get_acc_last));
    const double acc_replay = mean(rrw_replay.pull(get_acc_last));
    const double acc_mlp = mean(rrw_mlp.pull(get_acc_last));
    const bool ok = rrw_full.all_ok && rrw_replay.all_ok && rrw_mlp.all_ok && bt_full > bt_replay &&
                    bt_replay > bt_mlp && acc_full > acc_replay && acc_replay > acc_mlp && acc_full >= 0.85 &&
                    bt_full >= -0.35 && bt_replay <= -0.25;
    gate.check(7, "rrw beats replay and plain sgd on both transfer and final accuracy",
               ok, fmt("bt: full=%.3f replay=%.3f mlp=%.3f; acc_c: %.3f/%.3f/%.3f", bt_full, bt_replay, bt_mlp,
                       acc_full, acc_replay, acc_mlp));
  }

  const Group rrw_noag = run_group("rrw", "no_agency", kSeeds);
  {
    const double bt_full = mean(rrw_full.pull(get_bt));
    const double bt_noag = mean(rrw_noag.pull(get_bt));
    const bool ok = rrw_noag.all_ok && bt_noag >= bt_full;
    gate.check(8, "rrw responsiveness channel trades a little retention for control",
               ok, fmt("bt no_agency=%.3f >= full=%.3f", bt_noag, bt_full));
  }

  {
    const auto cal = ibf::rrw_calibration(ibf::RrwConfig{});
    const double kappa_recomputed = cal.sigma_star / std::sqrt(cal.d_eff);
    const bool ok = std::fabs(cal.d_eff - 4.0) <= 0.3 && cal.sigma_star >= 0.7 && cal.sigma_star <= 1.1 &&
                    std::fabs(cal.kappa - kappa_recomputed) <= 1e-12;
    gate.check(9, "rrw bandwidth calibration lands in the analytic window",
               ok, fmt("d_eff=%.3f sigma*=%.3f kappa=%.4f", cal.d_eff, cal.sigma_star, cal.kappa));
  }

  // --- algebraic property block -------------------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::string why;
    bool ok = property_read_matches_brute_force(why) && property_kernel_shape(why) &&
              property_gate_truth_table(why) && property_bounds_and_books(why) &&
              property_decay_bridging(why) && property_policy_algebra(why);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 5.0;
    gate.check(10, "engine and policy algebra hold on fresh random inputs",
               ok, why.empty() ? fmt("all properties hold, %.2fs", secs) : why);
  }

  {
    std::string why;
    const bool ok = mlp_gradients_match(why, 1e-4);
    gate.check(11, "baseline mlp gradients match finite differences", ok,
               why.empty() ? "100 probes within rel 1e-4" : why);
  }

  // --- end-to-end determinism ---------------------------------------------
  {
    const auto t1 = ibf::run_toy("full", 0, tiny_toy());
    const auto t2 = ibf::run_toy("full", 0, tiny_toy());
    const auto r1 = ibf::run_rrw("passive", 0, tiny_rrw());
    const auto r2 = ibf::run_rrw("passive", 0, tiny_rrw());
    const auto m1 = ibf::run_rrw("mlp", 0, tiny_rrw());
    const auto m2 = ibf::run_rrw("mlp", 0, tiny_rrw());
    bool ok = ibf::report_to_string(t1.report) == ibf::report_to_string(t2.report) &&
              ibf::report_to_string(r1) == ibf::report_to_string(r2) &&
              ibf::report_to_string(m1) == ibf::report_to_string(m2);
    std::vector<ibf::RunSpec> specs;
    for (std::uint64_t s = 0; s < 3; ++s) {
      specs.push_back({"toy", "full", s, tiny_toy(), false});
      specs.push_back({"toy", "no_cryst", s, tiny_toy(), false});
    }
    const auto serial = ibf::run_matrix(specs, 1);
    const auto wide = ibf::run_matrix(specs, 8);
    for (std::size_t i = 0; i < specs.size(); ++i)
      ok = ok && ibf::report_to_string(serial[i].report) == ibf::report_to_string(wide[i].report);
    gate.check(12, "byte-identical reports across reruns and worker counts", ok,
               ok ? "toy/rrw reruns and 1-vs-8 worker matrix agree" : "determinism broken");
  }

  std::printf("acceptance: %d/12 criteria passed\n", 12 - gate.failures);
  return gate.failures == 0 ? 0 : 1;
}
