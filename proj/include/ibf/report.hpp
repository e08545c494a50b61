#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibf/calibration.hpp"
#include "ibf/config.hpp"

namespace ibf {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline double population_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

}  // namespace detail

struct CensusRow {
  int epoch = 0;
  int phase = 0;
  long nucleations = 0;
  long crystallized_events = 0;
  long dissolved_events = 0;
  long verified_grants = 0;
  long merges = 0;
  long evictions = 0;
  long population_total = 0;
  long population_crystallized = 0;
  long population_verified = 0;
  std::vector<long> crystallized_by_birth;
  double discrepancy_variance = 0.0;
};

struct KSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct ExperimentReport {
  std::string domain;
  std::string condition;
  std::uint64_t seed = 0;
  std::string status = "ok";
  std::string error;
  EngineConfig config;
  ordered_json domain_config = ordered_json::object();
  std::string calibration_method;
  CalibrationResult calibration;
  int phase_count = 0;
  int context_count = 0;
  std::vector<std::vector<double>> accuracy_end_of_phase;  // [phase][context]
  double accuracy_a_initial = 0.0;  // on context A at end of phase A
  double accuracy_a_final = 0.0;    // on context A at end of the last phase
  double backward_transfer_a = 0.0;
  std::vector<CensusRow> census;
  KSummary k_eff;
  double min_epoch_discrepancy_variance = 0.0;
  double max_abs_discrepancy = 0.0;
  ordered_json extras = ordered_json::object();
};

inline ordered_json config_to_json(const EngineConfig& c) {
  ordered_json j;
  j["sigma_star"] = c.sigma_star;
  j["eta_base"] = c.eta_base;
  j["eta_cryst"] = c.eta_cryst;
  j["mu_base"] = c.mu_base;
  j["mu_cryst"] = c.mu_cryst;
  j["v_max"] = c.v_max;
  j["w_max"] = c.w_max;
  j["k0"] = c.k0;
  j["k_min"] = c.k_min;
  j["theta_exposure"] = c.theta_exposure;
  j["theta_create"] = c.theta_create;
  j["theta_conv"] = c.theta_conv;
  j["theta_rev"] = c.theta_rev;
  j["theta_w"] = c.theta_w;
  j["eta_w"] = c.eta_w;
  j["history_window"] = c.history_window;
  j["transient_exclusion"] = c.transient_exclusion;
  j["n_cryst_min"] = c.n_cryst_min;
  j["n_cross_min"] = c.n_cross_min;
  j["n_verify"] = c.n_verify;
  j["merge_factor"] = c.merge_factor;
  j["capacity"] = c.capacity;
  return j;
}

inline EngineConfig config_from_json(const ordered_json& j) {
  EngineConfig c;
  c.sigma_star = j.at("sigma_star").get<double>();
  c.eta_base = j.at("eta_base").get<double>();
  c.eta_cryst = j.at("eta_cryst").get<double>();
  c.mu_base = j.at("mu_base").get<double>();
  c.mu_cryst = j.at("mu_cryst").get<double>();
  c.v_max = j.at("v_max").get<double>();
  c.w_max = j.at("w_max").get<double>();
  c.k0 = j.at("k0").get<double>();
  c.k_min = j.at("k_min").get<double>();
  c.theta_exposure = j.at("theta_exposure").get<double>();
  c.theta_create = j.at("theta_create").get<double>();
  c.theta_conv = j.at("theta_conv").get<double>();
  c.theta_rev = j.at("theta_rev").get<double>();
  c.theta_w = j.at("theta_w").get<double>();
  c.eta_w = j.at("eta_w").get<double>();
  c.history_window = j.at("history_window").get<int>();
  c.transient_exclusion = j.at("transient_exclusion").get<int>();
  c.n_cryst_min = j.at("n_cryst_min").get<int>();
  c.n_cross_min = j.at("n_cross_min").get<int>();
  c.n_verify = j.at("n_verify").get<int>();
  c.merge_factor = j.at("merge_factor").get<double>();
  c.capacity = j.at("capacity").get<std::size_t>();
  return c;
}

inline ordered_json census_row_to_json(const CensusRow& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["phase"] = r.phase;
  j["nucleations"] = r.nucleations;
  j["crystallized_events"] = r.crystallized_events;
  j["dissolved_events"] = r.dissolved_events;
  j["verified_grants"] = r.verified_grants;
  j["merges"] = r.merges;
  j["evictions"] = r.evictions;
  j["population_total"] = r.population_total;
  j["population_crystallized"] = r.population_crystallized;
  j["population_verified"] = r.population_verified;
  j["crystallized_by_birth"] = r.crystallized_by_birth;
  j["discrepancy_variance"] = r.discrepancy_variance;
  return j;
}

inline CensusRow census_row_from_json(const ordered_json& j) {
  CensusRow r;
  r.epoch = j.at("epoch").get<int>();
  r.phase = j.at("phase").get<int>();
  r.nucleations = j.at("nucleations").get<long>();
  r.crystallized_events = j.at("crystallized_events").get<long>();
  r.dissolved_events = j.at("dissolved_events").get<long>();
  r.verified_grants = j.at("verified_grants").get<long>();
  r.merges = j.at("merges").get<long>();
  r.evictions = j.at("evictions").get<long>();
  r.population_total = j.at("population_total").get<long>();
  r.population_crystallized = j.at("population_crystallized").get<long>();
  r.population_verified = j.at("population_verified").get<long>();
  r.crystallized_by_birth = j.at("crystallized_by_birth").get<std::vector<long>>();
  r.discrepancy_variance = j.at("discrepancy_variance").get<double>();
  return r;
}

inline ordered_json report_to_json(const ExperimentReport& r) {
  ordered_json j;
  j["domain"] = r.domain;
  j["condition"] = r.condition;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["error"] = r.error;
  j["config"] = config_to_json(r.config);
  j["domain_config"] = r.domain_config;
  j["calibration_method"] = r.calibration_method;
  j["calibration"] = ordered_json{{"d_eff", r.calibration.d_eff},
                                  {"sibling_distance_median", r.calibration.sibling_distance_median},
                                  {"sigma_star", r.calibration.sigma_star},
                                  {"kappa", r.calibration.kappa},
                                  {"epsilon_bleed", r.calibration.epsilon_bleed}};
  j["phase_count"] = r.phase_count;
  j["context_count"] = r.context_count;
  j["accuracy_end_of_phase"] = r.accuracy_end_of_phase;
  j["accuracy_a_initial"] = r.accuracy_a_initial;
  j["accuracy_a_final"] = r.accuracy_a_final;
  j["backward_transfer_a"] = r.backward_transfer_a;
  ordered_json census = ordered_json::array();
  for (const CensusRow& row : r.census) census.push_back(census_row_to_json(row));
  j["census"] = census;
  j["k_eff"] = ordered_json{{"min", r.k_eff.min}, {"mean", r.k_eff.mean}, {"max", r.k_eff.max}};
  j["min_epoch_discrepancy_variance"] = r.min_epoch_discrepancy_variance;
  j["max_abs_discrepancy"] = r.max_abs_discrepancy;
  j["extras"] = r.extras;
  return j;
}

inline ExperimentReport report_from_json(const ordered_json& j) {
  ExperimentReport r;
  r.domain = j.at("domain").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.config = config_from_json(j.at("config"));
  r.domain_config = j.at("domain_config");
  r.calibration_method = j.at("calibration_method").get<std::string>();
  const auto& cal = j.at("calibration");
  r.calibration.d_eff = cal.at("d_eff").get<double>();
  r.calibration.sibling_distance_median = cal.at("sibling_distance_median").get<double>();
  r.calibration.sigma_star = cal.at("sigma_star").get<double>();
  r.calibration.kappa = cal.at("kappa").get<double>();
  r.calibration.epsilon_bleed = cal.at("epsilon_bleed").get<double>();
  r.phase_count = j.at("phase_count").get<int>();
  r.context_count = j.at("context_count").get<int>();
  r.accuracy_end_of_phase = j.at("accuracy_end_of_phase").get<std::vector<std::vector<double>>>();
  r.accuracy_a_initial = j.at("accuracy_a_initial").get<double>();
  r.accuracy_a_final = j.at("accuracy_a_final").get<double>();
  r.backward_transfer_a = j.at("backward_transfer_a").get<double>();
  for (const auto& row : j.at("census")) r.census.push_back(census_row_from_json(row));
  const auto& k = j.at("k_eff");
  r.k_eff = {k.at("min").get<double>(), k.at("mean").get<double>(), k.at("max").get<double>()};
  r.min_epoch_discrepancy_variance = j.at("min_epoch_discrepancy_variance").get<double>();
  r.max_abs_discrepancy = j.at("max_abs_discrepancy").get<double>();
  r.extras = j.at("extras");
  return r;
}

inline std::string report_to_string(const ExperimentReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline ExperimentReport parse_report(const std::string& text) {
  return report_from_json(ordered_json::parse(text));
}

inline bool reports_equal(const ExperimentReport& a, const ExperimentReport& b) {
  return report_to_string(a) == report_to_string(b);
}

// ---------------------------------------------------------------- aggregation

inline int condition_rank(const std::string& c) {
  static const std::vector<std::string> order = {"full",    "no_agency", "no_cryst", "no_crucible",
                                                 "passive", "mlp",       "replay"};
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == c) return static_cast<int>(i);
  return static_cast<int>(order.size());
}

struct MetricStat {
  double mean = 0.0;
  double std_dev = 0.0;
  bool has_std = false;  // false at n == 1
};

inline MetricStat mean_std(const std::vector<double>& values) {
  MetricStat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() >= 2) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(acc / static_cast<double>(values.size() - 1));
    s.has_std = true;
  }
  return s;
}

struct AggregateRow {
  std::string domain;
  std::string condition;
  std::size_t n = 0;
  MetricStat acc_a;     // context A accuracy at end of phase A
  MetricStat bt_a;      // backward transfer on context A
  MetricStat acc_last;  // final-phase accuracy on its own context
};

inline std::vector<AggregateRow> aggregate(const std::vector<ExperimentReport>& reports) {
  std::map<std::pair<std::string, std::string>, std::vector<const ExperimentReport*>> groups;
  for (const auto& r : reports) {
    if (r.status != "ok") continue;
    groups[{r.domain, r.condition}].push_back(&r);
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row;
    row.domain = key.first;
    row.condition = key.second;
    row.n = members.size();
    std::vector<double> acc_a, bt_a, acc_last;
    for (const ExperimentReport* r : members) {
      acc_a.push_back(r->accuracy_a_initial);
      bt_a.push_back(r->backward_transfer_a);
      acc_last.push_back(r->accuracy_end_of_phase.back().back());
    }
    row.acc_a = mean_std(acc_a);
    row.bt_a = mean_std(bt_a);
    row.acc_last = mean_std(acc_last);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
    if (a.domain != b.domain) return a.domain > b.domain;  // toy before rrw
    return condition_rank(a.condition) < condition_rank(b.condition);
  });
  return rows;
}

inline std::string format_sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string last_phase_label(const std::string& domain) {
  return domain == "rrw" ? "Acc_C" : "Acc_B";
}

inline std::string emit_summary_csv(const std::vector<AggregateRow>& rows) {
  std::string out =
      "domain,condition,n,acc_a_mean,acc_a_std,bt_a_mean,bt_a_std,acc_last_mean,acc_last_std\n";
  for (const AggregateRow& r : rows) {
    out += r.domain + "," + r.condition + "," + std::to_string(r.n);
    for (const MetricStat* m : {&r.acc_a, &r.bt_a, &r.acc_last}) {
      out += "," + format_sig6(m->mean);
      out += ",";
      if (m->has_std) out += format_sig6(m->std_dev);
    }
    out += "\n";
  }
  return out;
}

inline std::string format_cell(const MetricStat& m, bool signed_value) {
  std::string v = format_fixed3(m.mean);
  if (signed_value && m.mean >= 0.0) v = "+" + v;
  if (m.has_std) v += " \xC2\xB1 " + format_fixed3(m.std_dev);
  return v;
}

inline std::string emit_summary_md(const std::vector<AggregateRow>& rows) {
  std::string out;
  std::string current_domain;
  for (const AggregateRow& r : rows) {
    if (r.domain != current_domain) {
      current_domain = r.domain;
      if (!out.empty()) out += "\n";
      out += "## " + current_domain + "\n\n";
      out += "| Condition | Acc_A | BT_A | " + last_phase_label(current_domain) + " |\n";
      out += "| --- | --- | --- | --- |\n";
    }
    out += "| " + r.condition + " | " + format_cell(r.acc_a, false) + " | " + format_cell(r.bt_a, true) +
           " | " + format_cell(r.acc_last, false) + " |\n";
  }
  return out;
}

}  // namespace ibf
