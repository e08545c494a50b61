#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ibf/harness.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& item : raw) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

void print_calibration(const std::string& method, const ibf::CalibrationResult& cal) {
  std::printf("method: %s\n", method.c_str());
  std::printf("d_eff: %.6g\n", cal.d_eff);
  std::printf("sibling_distance_median: %.6g\n", cal.sibling_distance_median);
  std::printf("sigma_star: %.6g\n", cal.sigma_star);
  std::printf("kappa: %.6g\n", cal.kappa);
  std::printf("epsilon_bleed: %.6g\n", cal.epsilon_bleed);
}

int write_outputs(const std::vector<ibf::RunOutput>& outputs, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  bool any_failed = false;
  for (const ibf::RunOutput& out : outputs) {
    const std::string path = (fs::path(out_dir) / ibf::run_filename(out.report)).string();
    ibf::write_text_file(path, ibf::report_to_string(out.report));
    for (const ibf::LandscapeSnapshot& snap : out.snapshots) {
      const std::string spath = (fs::path(out_dir) / ibf::snapshot_filename(out.report, snap.epoch)).string();
      ibf::emit_landscape_svg(snap, spath);
    }
    if (out.report.status != "ok") {
      any_failed = true;
      std::printf("%s status=failed wall=%.2fs error=%s\n", path.c_str(), out.wall_seconds,
                  out.report.error.c_str());
    } else {
      std::printf("%s status=ok wall=%.2fs acc_a=%.4f bt_a=%+.4f\n", path.c_str(), out.wall_seconds,
                  out.report.accuracy_a_initial, out.report.backward_transfer_a);
    }
  }
  return any_failed ? 1 : 0;
}

int write_summaries(const std::vector<ibf::ExperimentReport>& reports, const std::string& dir,
                    const std::string& format) {
  namespace fs = std::filesystem;
  const auto rows = ibf::aggregate(reports);
  if (rows.empty()) {
    std::fprintf(stderr, "no successful reports to aggregate\n");
    return 2;
  }
  const std::string csv = ibf::emit_summary_csv(rows);
  const std::string md = ibf::emit_summary_md(rows);
  ibf::write_text_file((fs::path(dir) / "summary.csv").string(), csv);
  ibf::write_text_file((fs::path(dir) / "summary.md").string(), md);
  std::fputs(format == "csv" ? csv.c_str() : md.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-memory continual learning experiments"};
  app.require_subcommand(1);

  std::string domain;
  std::string condition;
  int seeds = 1;
  std::uint64_t seed_base = 0;
  std::string config_path;
  std::vector<std::string> set_args;
  bool snapshots = false;
  std::string out_dir;
  unsigned parallelism = std::max(1u, std::thread::hardware_concurrency());
  int samples = 5000;
  double epsilon_bleed = std::exp(-2.0);
  std::string report_dir;
  std::string format = "md";

  CLI::App* run_cmd = app.add_subcommand("run", "execute one condition over a seed range");
  run_cmd->add_option("--domain", domain, "toy or rrw")->required()->check(CLI::IsMember({"toy", "rrw"}));
  run_cmd->add_option("--condition", condition, "ablation condition")->required();
  run_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed-base", seed_base, "first seed value");
  run_cmd->add_option("--config", config_path, "key=value config file");
  run_cmd->add_option("--set", set_args, "config override key=value (repeatable; wins over --config)");
  run_cmd->add_flag("--snapshots", snapshots, "emit per-epoch landscape SVGs (toy only)");
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--parallelism", parallelism, "worker threads");

  CLI::App* cal_cmd = app.add_subcommand("calibrate", "print the bandwidth calibration record");
  cal_cmd->add_option("--domain", domain, "toy or rrw")->required()->check(CLI::IsMember({"toy", "rrw"}));
  cal_cmd->add_option("--samples", samples, "latent sample count")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--epsilon-bleed", epsilon_bleed, "kernel value at the median sibling distance");

  CLI::App* report_cmd = app.add_subcommand("report", "aggregate result files into summary tables");
  report_cmd->add_option("dir", report_dir, "directory of run result files")->required();
  report_cmd->add_option("--format", format, "stdout format")->check(CLI::IsMember({"csv", "md"}));

  CLI::App* abl_cmd = app.add_subcommand("ablation", "run every condition of a domain and aggregate");
  abl_cmd->add_option("--domain", domain, "toy or rrw")->required()->check(CLI::IsMember({"toy", "rrw"}));
  abl_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  abl_cmd->add_option("--seed-base", seed_base, "first seed value");
  abl_cmd->add_option("--config", config_path, "key=value config file");
  abl_cmd->add_option("--set", set_args, "config override key=value (repeatable; wins over --config)");
  abl_cmd->add_option("--out", out_dir, "output directory")->required();
  abl_cmd->add_option("--parallelism", parallelism, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (!config_path.empty()) overrides = ibf::parse_config_file(config_path);
    for (auto& kv : split_overrides(set_args)) overrides.push_back(std::move(kv));

    if (run_cmd->parsed()) {
      if (!ibf::valid_condition(domain, condition)) {
        std::fprintf(stderr, "condition '%s' is not valid for domain '%s'\n", condition.c_str(), domain.c_str());
        return 2;
      }
      std::vector<ibf::RunSpec> specs;
      for (int i = 0; i < seeds; ++i)
        specs.push_back({domain, condition, seed_base + static_cast<std::uint64_t>(i), overrides, snapshots});
      return write_outputs(ibf::run_matrix(specs, parallelism), out_dir);
    }

    if (cal_cmd->parsed()) {
      if (domain == "toy") {
        ibf::ToyConfig tc;
        print_calibration("kappa_transplant", ibf::toy_calibration(tc, samples));
      } else {
        ibf::RrwConfig rc;
        print_calibration("bleed_rule", ibf::rrw_calibration(rc, samples, epsilon_bleed));
      }
      return 0;
    }

    if (report_cmd->parsed()) {
      return write_summaries(ibf::read_reports_dir(report_dir), report_dir, format);
    }

    if (abl_cmd->parsed()) {
      std::vector<ibf::RunSpec> specs;
      for (const std::string& c : ibf::domain_conditions(domain))
        for (int i = 0; i < seeds; ++i)
          specs.push_back({domain, c, seed_base + static_cast<std::uint64_t>(i), overrides, false});
      const auto outputs = ibf::run_matrix(specs, parallelism);
      const int run_rc = write_outputs(outputs, out_dir);
      std::vector<ibf::ExperimentReport> reports;
      reports.reserve(outputs.size());
      for (const auto& o : outputs) reports.push_back(o.report);
      const int sum_rc = write_summaries(reports, out_dir, "md");
      return run_rc != 0 ? run_rc : sum_rc;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
