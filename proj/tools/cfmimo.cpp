#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "acceptance_suite.hpp"
#include "cellfree/harness.hpp"

namespace {

using cellfree::ExperimentSpec;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw cellfree::ConfigError("cannot read spec file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Flags shared by `run` and `compare`; only flags the user actually passed are
// merged into the spec JSON, so file/preset values survive untouched.
struct SpecFlags {
  std::string spec_file, scenario, config_json, layout, mode, link, quantity;
  std::string scheme, lsfd, power, out, format;
  double upsilon = 0, kappa = 0, asd = 0;
  int setups = 0, draws = 0;
  std::uint64_t seed = 0;
  int threads = 1;

  void attach(CLI::App* cmd, bool with_scheme) {
    cmd->add_option("--spec", spec_file, "experiment spec JSON file");
    cmd->add_option("--scenario", scenario,
                    "preset name (running-example-100x4, running-example-400x1,"
                    " intro-benchmark) or 'inline'");
    cmd->add_option("--config", config_json,
                    "inline network config overrides as JSON");
    cmd->add_option("--layout", layout, "AP layout: grid|uniform");
    cmd->add_option("--mode", mode,
                    "centralized|distributed|cellular|small-cell");
    cmd->add_option("--link", link, "uplink|downlink");
    cmd->add_option("--quantity", quantity, "se|snr");
    if (with_scheme)
      cmd->add_option("--scheme", scheme,
                      "mmse|p-mmse|p-rzf|mr (centralized), "
                      "l-mmse|lp-mmse|mr (distributed)");
    cmd->add_option("--lsfd", lsfd, "large-scale fading decoding: opt|n-opt|none");
    cmd->add_option("--power", power, "full|fpc (uplink)|fpa (downlink)");
    cmd->add_option("--upsilon", upsilon, "power-heuristic exponent");
    cmd->add_option("--kappa", kappa, "fractional-allocation split exponent");
    cmd->add_option("--asd", asd, "angular standard deviation [deg]");
    cmd->add_option("--setups", setups, "number of random network drops");
    cmd->add_option("--draws", draws, "channel realizations per drop");
    cmd->add_option("--seed", seed, "master RNG seed");
    cmd->add_option("--out", out, "output file path");
    cmd->add_option("--format", format, "output format: csv|json");
    cmd->add_option("--threads", threads, "setup-level worker threads");
  }

  ExperimentSpec build(const CLI::App* cmd) const {
    nlohmann::json j = spec_file.empty()
                           ? nlohmann::json::object()
                           : nlohmann::json::parse(read_file(spec_file));
    auto set = [&](const char* flag, const char* key, auto value) {
      if (cmd->count(flag)) j[key] = value;
    };
    set("--scenario", "scenario", scenario);
    if (cmd->count("--config"))
      j["config"] = nlohmann::json::parse(config_json);
    set("--layout", "layout", layout);
    set("--mode", "mode", mode);
    set("--link", "link", link);
    set("--quantity", "quantity", quantity);
    const CLI::Option* so = cmd->get_option_no_throw("--scheme");
    if (so && so->count()) j["scheme"] = scheme;
    set("--lsfd", "lsfd", lsfd);
    set("--power", "power", power);
    set("--upsilon", "upsilon", upsilon);
    set("--kappa", "kappa", kappa);
    set("--asd", "asd_deg", asd);
    set("--setups", "num_setups", setups);
    set("--draws", "draws_per_setup", draws);
    set("--seed", "seed", seed);
    set("--out", "out", out);
    set("--format", "format", format);
    return ExperimentSpec::from_json(j.dump());
  }
};

void print_quantiles(const cellfree::CdfTable& t, const std::string& unit) {
  for (double q : {0.05, 0.10, 0.50})
    std::printf("  %2.0f%% quantile: %.4f %s (std err %.4f)\n", 100 * q,
                t.quantile(q), unit.c_str(), t.quantile_std_error(q));
}

int cmd_run(const SpecFlags& flags, const CLI::App* cmd, bool report) {
  ExperimentSpec spec = flags.build(cmd);
  cellfree::validate(spec);
  cellfree::RunOptions opt;
  opt.threads = flags.threads;
  auto res = cellfree::run_experiment(spec, opt);
  std::printf("%s %s / %s / %s, %d setups x %d draws, %d samples\n",
              spec.scenario.c_str(),
              spec.mode == cellfree::OperationMode::centralized ? "centralized"
              : spec.mode == cellfree::OperationMode::distributed
                  ? "distributed"
              : spec.mode == cellfree::OperationMode::cellular ? "cellular"
                                                               : "small-cell",
              spec.scheme.c_str(), spec.power.c_str(), spec.num_setups,
              spec.draws_per_setup, res.table.size());
  print_quantiles(res.table,
                  spec.quantity == cellfree::Quantity::snr ? "dB"
                                                           : "bit/s/Hz");
  if (!spec.out.empty()) {
    cellfree::emit(res.table, spec, spec.format, spec.out);
    std::printf("wrote %s (%s)\n", spec.out.c_str(), spec.format.c_str());
  }
  if (report) std::cout << res.report.to_json() << std::endl;
  return 0;
}

int cmd_compare(const SpecFlags& flags, const CLI::App* cmd,
                const std::vector<std::string>& schemes) {
  ExperimentSpec base = flags.build(cmd);
  std::printf("%-10s %10s %10s %10s\n", "scheme", "5%", "10%", "50%");
  for (const std::string& s : schemes) {
    ExperimentSpec spec = base;
    spec.scheme = s;
    cellfree::validate(spec);
    cellfree::RunOptions opt;
    opt.threads = flags.threads;
    auto res = cellfree::run_experiment(spec, opt);
    std::printf("%-10s %10.4f %10.4f %10.4f\n", s.c_str(),
                res.table.quantile(0.05), res.table.quantile(0.10),
                res.table.quantile(0.50));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cell-free massive MIMO Monte Carlo simulator"};
  app.require_subcommand(1);

  SpecFlags run_flags, cmp_flags;
  bool with_report = false;
  std::vector<std::string> schemes = {"mmse", "p-mmse", "p-rzf", "mr"};
  bool quick = false;

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  run_flags.attach(run, true);
  run->add_flag("--report", with_report,
                "also print the fronthaul/complexity accounting as JSON");

  CLI::App* cmp = app.add_subcommand(
      "compare", "run several schemes on the same seed and tabulate quantiles");
  cmp_flags.attach(cmp, false);
  cmp->add_option("--schemes", schemes, "schemes to compare");

  CLI::App* check =
      app.add_subcommand("check", "run the release acceptance criteria");
  check->add_flag("--quick", quick, "skip the two long-running criteria");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags, run, with_report);
    if (cmp->parsed()) return cmd_compare(cmp_flags, cmp, schemes);
    return cellfree::run_acceptance(std::cout, quick);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
