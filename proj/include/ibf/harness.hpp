#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ibf/report.hpp"
#include "ibf/rrw.hpp"
#include "ibf/svg.hpp"
#include "ibf/toy.hpp"

namespace ibf {

inline const std::vector<std::string>& domain_conditions(const std::string& domain) {
  static const std::vector<std::string> toy = {"full", "no_agency", "no_cryst", "no_crucible", "passive"};
  static const std::vector<std::string> rrw = {"full",    "no_agency", "no_cryst", "no_crucible",
                                               "passive", "mlp",       "replay"};
  if (domain == "toy") return toy;
  if (domain == "rrw") return rrw;
  throw std::invalid_argument("unknown domain: " + domain);
}

inline bool valid_condition(const std::string& domain, const std::string& condition) {
  for (const std::string& c : domain_conditions(domain))
    if (c == condition) return true;
  return false;
}

struct RunSpec {
  std::string domain;
  std::string condition;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool snapshots = false;
};

struct RunOutput {
  ExperimentReport report;
  std::vector<LandscapeSnapshot> snapshots;
  double wall_seconds = 0.0;  // logged by the CLI, never serialized
};

// A failing run yields a status=failed report; the caller decides what that
// means for exit codes. Nothing here ever throws past this function.
inline RunOutput run_one(const RunSpec& spec) {
  RunOutput out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (!valid_condition(spec.domain, spec.condition))
      throw std::invalid_argument("condition '" + spec.condition + "' is not valid for domain '" + spec.domain + "'");
    if (spec.domain == "toy") {
      ToyRunResult r = run_toy(spec.condition, spec.seed, spec.overrides, spec.snapshots);
      out.report = std::move(r.report);
      out.snapshots = std::move(r.snapshots);
    } else {
      out.report = run_rrw(spec.condition, spec.seed, spec.overrides);
    }
  } catch (const std::exception& e) {
    out.report = ExperimentReport{};
    out.report.domain = spec.domain;
    out.report.condition = spec.condition;
    out.report.seed = spec.seed;
    out.report.status = "failed";
    out.report.error = e.what();
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Results land in spec order regardless of scheduling, so parallelism never
// changes the output.
inline std::vector<RunOutput> run_matrix(const std::vector<RunSpec>& specs, unsigned parallelism = 1) {
  if (specs.empty()) throw std::invalid_argument("run_matrix: empty spec list");
  std::vector<RunOutput> results(specs.size());
  const unsigned workers =
      std::min<unsigned>(std::max(1u, parallelism), static_cast<unsigned>(specs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) results[i] = run_one(specs[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      results[i] = run_one(specs[i]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  return results;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Flat key=value file; '#' starts a comment, blank lines are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key=value");
    entries.emplace_back(key, value);
  }
  return entries;
}

inline std::string run_filename(const ExperimentReport& r) {
  return r.domain + "_" + r.condition + "_" + std::to_string(r.seed) + ".json";
}

inline std::string snapshot_filename(const ExperimentReport& r, int epoch) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", epoch);
  return r.domain + "_" + r.condition + "_" + std::to_string(r.seed) + "_epoch_" + buf + ".svg";
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<ExperimentReport> read_reports_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<ExperimentReport> reports;
  reports.reserve(paths.size());
  for (const std::string& p : paths) reports.push_back(parse_report(read_text_file(p)));
  return reports;
}

}  // namespace ibf
