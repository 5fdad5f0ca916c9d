#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fgd/harness.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool plot = false;
  std::string mode;
  bool corrupt_feedback = false;
};

void add_experiment(CLI::App& app, fgd::Experiment exp, const std::string& help,
                    CliOverrides& ov, std::optional<fgd::Experiment>& chosen) {
  CLI::App* sub = app.add_subcommand(fgd::to_string(exp), help);
  sub->add_option("--config", ov.config_path, "config file (key = value lines)");
  sub->add_option("--seed", ov.seed, "base seed override");
  sub->add_option("--out", ov.out_dir, "output directory");
  sub->add_flag("--plot", ov.plot, "emit SVG charts next to the metrics");
  sub->add_option("--mode", ov.mode, "gram inverse mode: exact or neumann")
      ->check(CLI::IsMember({"exact", "neumann"}));
  if (exp == fgd::Experiment::verify) {
    sub->add_flag("--corrupt-feedback", ov.corrupt_feedback,
                  "flip the feedback sign inside the property battery "
                  "(fault-injection self-test)");
  }
  sub->callback([exp, &chosen] { chosen = exp; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback-stabilized orthogonality-preserving optimizer: "
               "experiments and verification harness"};
  app.require_subcommand(1);

  CliOverrides ov;
  std::optional<fgd::Experiment> chosen;
  add_experiment(app, fgd::Experiment::toy,
                 "nearest-orthogonal toy problem, multi-seed", ov, chosen);
  add_experiment(app, fgd::Experiment::decay,
                 "exponential decay of the Lyapunov function", ov, chosen);
  add_experiment(app, fgd::Experiment::invariance,
                 "constraint invariance of the bundle field under RK4", ov, chosen);
  add_experiment(app, fgd::Experiment::bench, "step-cost scaling sweeps", ov, chosen);
  add_experiment(app, fgd::Experiment::mlp,
                 "two-moons MLP demo, feedback vs plain momentum", ov, chosen);
  add_experiment(app, fgd::Experiment::verify, "property battery", ov, chosen);

  CLI11_PARSE(app, argc, argv);

  try {
    fgd::RunConfig cfg;
    if (!ov.config_path.empty()) {
      cfg = fgd::load_config(ov.config_path, chosen);
    } else {
      cfg = fgd::default_config(*chosen);
    }
    if (ov.seed) cfg.seed = *ov.seed;
    if (!ov.out_dir.empty()) cfg.output_dir = ov.out_dir;
    if (ov.plot) cfg.plot = true;
    if (ov.mode == "exact") cfg.fgd.inverse_mode = fgd::InverseMode::exact;
    if (ov.mode == "neumann") cfg.fgd.inverse_mode = fgd::InverseMode::neumann;
    if (ov.corrupt_feedback) cfg.corrupt_feedback = true;
    return fgd::run_experiment(cfg);
  } catch (const fgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return fgd::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fgd::kExitNumericalAbort;
  }
}
