#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ibf {

// All thresholds and rates of the particle engine. Domains override a few
// fields (sigma_star always; the toy also narrows theta_create).
struct EngineConfig {
  double sigma_star = 1.0;        // kernel width given to nucleated particles
  double eta_base = 0.5;          // write rate, transient particles
  double eta_cryst = 0.1;         // write rate, crystallized particles
  double mu_base = 0.06;          // per-epoch decay, transient
  double mu_cryst = 0.001;        // per-epoch decay, crystallized
  double v_max = 1.0;             // value amplitude clip
  double w_max = 5.0;             // responsiveness amplitude clip
  double k0 = 5.0;                // responsiveness baseline
  double k_min = 1.0;             // responsiveness floor
  double theta_exposure = 0.1;    // kernel threshold for cross-context logging / w moves
  double theta_create = 0.6;      // kernel threshold below which nucleation fires
  double theta_conv = 0.15;       // |mean local history| bound for crystallization
  double theta_rev = -0.125;      // reversal threshold on amplitude * cross mean
  double theta_w = 0.25;          // variance scale in the w target
  double eta_w = 0.2;             // w move rate
  int history_window = 20;        // recent-window length for all history stats
  int transient_exclusion = 5;    // initial entries excluded from the w variance
  int n_cryst_min = 5;            // updates required before crystallization
  int n_cross_min = 4;            // cross entries required before a Crucible verdict
  int n_verify = 4;               // cross entries required for verification
  double merge_factor = 0.3;      // merge radius as a fraction of sigma
  std::size_t capacity = 5000;    // particles per population

  void validate() const {
    auto fail = [](const char* msg) { throw std::invalid_argument(std::string("EngineConfig: ") + msg); };
    if (!(sigma_star > 0.0)) fail("sigma_star must be positive");
    if (!(eta_base > 0.0) || !(eta_cryst > 0.0)) fail("write rates must be positive");
    if (!(mu_base >= 0.0 && mu_base < 1.0)) fail("mu_base must be in [0,1)");
    if (!(mu_cryst >= 0.0 && mu_cryst < mu_base)) fail("mu_cryst must be in [0, mu_base)");
    if (!(v_max > 0.0) || !(w_max > 0.0)) fail("amplitude clips must be positive");
    if (!(k_min <= k0)) fail("k_min must not exceed k0");
    if (!(theta_exposure > 0.0 && theta_exposure <= 1.0)) fail("theta_exposure must be in (0,1]");
    if (!(theta_create > 0.0 && theta_create <= 1.0)) fail("theta_create must be in (0,1]");
    if (!(theta_conv > 0.0)) fail("theta_conv must be positive");
    if (!(theta_rev < 0.0)) fail("theta_rev must be negative");
    if (!(theta_w > 0.0)) fail("theta_w must be positive");
    if (!(eta_w > 0.0 && eta_w <= 1.0)) fail("eta_w must be in (0,1]");
    if (history_window < 1) fail("history_window must be >= 1");
    if (transient_exclusion < 0) fail("transient_exclusion must be >= 0");
    if (n_cryst_min < 1) fail("n_cryst_min must be >= 1");
    if (n_cross_min < 1 || n_verify < 1) fail("cross-count thresholds must be >= 1");
    if (!(merge_factor > 0.0)) fail("merge_factor must be positive");
    if (capacity < 1) fail("capacity must be >= 1");
  }
};

// Feature switches for the ablation conditions.
//   full:        all true
//   no_agency:   agency = false   (k pinned to k0, no w moves)
//   no_cryst:    crystallization = false
//   no_crucible: crucible = false (no cross logging, no verdicts, no grants)
//   passive:     writes = false
struct EngineMode {
  bool writes = true;
  bool crystallization = true;
  bool crucible = true;
  bool agency = true;
};

inline EngineMode condition_mode(const std::string& condition) {
  EngineMode m;
  if (condition == "full") return m;
  if (condition == "no_agency") { m.agency = false; return m; }
  if (condition == "no_cryst") { m.crystallization = false; return m; }
  if (condition == "no_crucible") { m.crucible = false; return m; }
  if (condition == "passive") { m.writes = false; return m; }
  throw std::invalid_argument("unknown engine condition: " + condition);
}

// Applies "key=value" style overrides. Returns false for unknown keys.
inline bool apply_override(EngineConfig& cfg, const std::string& key, const std::string& value) {
  auto as_double = [&]() { return std::stod(value); };
  auto as_int = [&]() { return std::stoi(value); };
  if (key == "sigma_star") cfg.sigma_star = as_double();
  else if (key == "eta_base") cfg.eta_base = as_double();
  else if (key == "eta_cryst") cfg.eta_cryst = as_double();
  else if (key == "mu_base") cfg.mu_base = as_double();
  else if (key == "mu_cryst") cfg.mu_cryst = as_double();
  else if (key == "v_max") cfg.v_max = as_double();
  else if (key == "w_max") cfg.w_max = as_double();
  else if (key == "k0") cfg.k0 = as_double();
  else if (key == "k_min") cfg.k_min = as_double();
  else if (key == "theta_exposure") cfg.theta_exposure = as_double();
  else if (key == "theta_create") cfg.theta_create = as_double();
  else if (key == "theta_conv") cfg.theta_conv = as_double();
  else if (key == "theta_rev") cfg.theta_rev = as_double();
  else if (key == "theta_w") cfg.theta_w = as_double();
  else if (key == "eta_w") cfg.eta_w = as_double();
  else if (key == "history_window") cfg.history_window = as_int();
  else if (key == "transient_exclusion") cfg.transient_exclusion = as_int();
  else if (key == "n_cryst_min") cfg.n_cryst_min = as_int();
  else if (key == "n_cross_min") cfg.n_cross_min = as_int();
  else if (key == "n_verify") cfg.n_verify = as_int();
  else if (key == "merge_factor") cfg.merge_factor = as_double();
  else if (key == "capacity") cfg.capacity = static_cast<std::size_t>(std::stoll(value));
  else return false;
  return true;
}

}  // namespace ibf
