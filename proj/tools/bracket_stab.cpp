#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bstab/errors.hpp"
#include "bstab/format.hpp"
#include "bstab/scenario.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-c,--config", args.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--out", args.out, "Directory for artifacts (summary.json, report.md, traces)");
  sub->add_option("--seed", args.seed, "Override the scenario seed");
  sub->add_option("-j,--jobs", args.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

bstab::Scenario load(const CommonArgs& args) {
  bstab::Scenario sc = bstab::load_scenario_file(args.config);
  if (args.seed) {
    sc.seed = *args.seed;
    sc.constants.seed = *args.seed;
  }
  if (args.jobs) {
    sc.jobs = *args.jobs;
    sc.constants.jobs = *args.jobs;
  }
  return sc;
}

std::string num(double v) { return std::isfinite(v) ? bstab::format_double(v) : std::string("inf"); }

void print_schedules(const bstab::ScenarioResult& res) {
  for (const auto& s : res.schedules) {
    std::cout << "R = " << num(s.R) << ", r = " << num(s.r) << ": U^_R = " << num(s.U_hat_R)
              << ", R~ = " << num(s.R_tilde) << ", u^_r = " << num(s.u_hat_r) << ", delta0 = " << num(s.delta0)
              << '\n';
    for (std::size_t l = 0; l < s.delta.size(); ++l) {
      std::cout << "  degree " << l + 1 << ": delta_hat = " << num(s.delta_hat[l])
                << ", delta_check = " << num(s.delta_check[l]) << ", delta = " << num(s.delta[l]) << '\n';
    }
    std::cout << "  mu = " << num(s.mu) << ", J = " << num(s.J) << ", T = " << num(s.T) << ", Gamma = "
              << num(s.Gamma) << ", Lambda = " << num(s.Lambda) << '\n';
  }
}

void print_warnings(const bstab::ScenarioResult& res) {
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
}

int run_stage(const CommonArgs& args, bstab::Stage stage) {
  const bstab::Scenario sc = load(args);
  const bstab::ScenarioResult res = bstab::run_scenario(sc, stage);
  switch (stage) {
    case bstab::Stage::Schedule:
      print_schedules(res);
      break;
    case bstab::Stage::Check: {
      const auto& d = *res.dissipative;
      std::cout << (d.passed() ? "PASS" : "FAIL") << ": dissipative inequality on " << d.evaluated << " of "
                << d.samples << " samples, max H + gamma(U) = " << num(d.max_violation) << '\n';
      for (std::size_t i = 0; i < std::min<std::size_t>(d.witnesses.size(), 5); ++i) {
        std::cout << "  witness " << d.witnesses[i].label << " value " << num(d.witnesses[i].value) << '\n';
      }
      break;
    }
    case bstab::Stage::Simulate:
      print_schedules(res);
      for (std::size_t i = 0; i < res.runs.size(); ++i) {
        const auto& run = res.runs[i];
        std::cout << "run " << i << ": ";
        if (run.skipped) {
          std::cout << "skipped (" << run.skip_reason << ")\n";
          continue;
        }
        const auto& rec = run.record;
        std::cout << bstab::to_string(rec.termination) << ", steps " << rec.steps.size() << ", entry time "
                  << (rec.entry_time ? num(*rec.entry_time) : std::string("-")) << ", overshoot "
                  << num(rec.overshoot) << ", cost " << num(rec.total_cost) << ", conditions "
                  << (run.verdict.four_conditions() ? "hold" : "fail")
                  << (rec.certified ? "" : " (uncertified)") << '\n';
      }
      break;
    case bstab::Stage::Asymptotic:
      for (const auto& [name, st] : res.asymptotic) {
        std::cout << name << ": " << (st.exact ? std::string("exact (errors at roundoff)") : "slope " + num(st.slope))
                  << '\n';
      }
      break;
  }
  print_warnings(res);
  if (!args.out.empty()) bstab::write_artifacts(sc, res, stage, args.out);
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling feedback stabilization with Lie-bracket controls"};
  app.require_subcommand(1);

  CommonArgs check_args, schedule_args, simulate_args, asym_args;
  auto* check = app.add_subcommand("check", "Sample the dissipative inequality of the candidate");
  add_common(check, check_args);
  auto* schedule = app.add_subcommand("schedule", "Estimate constants and print the step schedule");
  add_common(schedule, schedule_args);
  auto* simulate = app.add_subcommand("simulate", "Run the sampling process and audit conditions (i)-(iv)");
  add_common(simulate, simulate_args);
  auto* asym = app.add_subcommand("asymptotic", "Measure the endpoint error order of oriented controls");
  add_common(asym, asym_args);

  int m = 2, h = 2;
  bool no_prune = false;
  auto* brackets = app.add_subcommand("brackets", "List the control labels of degree <= h");
  brackets->set_help_flag("--help", "Print this help message and exit");
  brackets->add_option("--m", m, "Number of vector fields")->required()->check(CLI::PositiveNumber);
  brackets->add_option("--h", h, "Maximal degree")->required()->check(CLI::Range(1, 8));
  brackets->add_flag("--no-prune", no_prune, "Keep labels with identical factors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bstab::kExitConfig;
  }

  try {
    if (*check) return run_stage(check_args, bstab::Stage::Check);
    if (*schedule) return run_stage(schedule_args, bstab::Stage::Schedule);
    if (*simulate) return run_stage(simulate_args, bstab::Stage::Simulate);
    if (*asym) return run_stage(asym_args, bstab::Stage::Asymptotic);
    if (*brackets) {
      for (const auto& label : bstab::enumerate_labels(m, h, !no_prune)) {
        std::cout << label.to_string() << "  degree " << label.degree() << "  switches " << label.switch_number()
                  << '\n';
      }
      return 0;
    }
  } catch (const bstab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bstab::kExitConfig;
  } catch (const bstab::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return bstab::kExitConfig;
  } catch (const bstab::Error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return bstab::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bstab::kExitNumerical;
  }
  return 0;
}
