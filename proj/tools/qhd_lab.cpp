#include <iostream>

#include <CLI11.hpp>

#include "qhdlab/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = qhdlab::cli;
  CLI::App app{"qhd_lab: gradient-augmented quantum Hamiltonian descent simulator and baselines"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment config");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  run->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides seed)");

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  std::string suite;
  verify->add_option("suite", suite, "commutators | lyapunov | splitting | gradients")
      ->required()
      ->check(CLI::IsMember({"commutators", "lyapunov", "splitting", "gradients"}));

  auto* plot = app.add_subcommand("plot", "render series.csv files as an SVG");
  std::string plot_out;
  std::vector<std::string> series;
  plot->add_option("--out", plot_out, "output SVG")->required();
  plot->add_option("series", series, "series.csv files")->required();

  app.add_subcommand("list-objectives", "list the built-in objectives");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cli::ExperimentConfig cfg = cli::parse_config(config_path);
      if (*out_opt) cfg.output_dir = out_dir;
      if (*seed_opt) cfg.seed = seed;
      cli::cmd_run(cfg, std::cerr);
      return 0;
    }
    if (*verify) return cli::cmd_verify(suite, std::cout) ? 0 : 1;
    if (*plot) {
      cli::cmd_plot({series.begin(), series.end()}, plot_out);
      return 0;
    }
    cli::list_objectives(std::cout);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
