// boats: synthetic sparse-regression benchmarks and model fitting.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "boats/cli/commands.hpp"
#include "boats/cli/config.hpp"

namespace {

using namespace boats;
using namespace boats::cli;

std::optional<Seed> seed_override(const CLI::Option* opt, Seed value) {
  return opt->count() ? std::optional<Seed>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive threshold selection with OLS refit, and regularized baselines"};
  app.require_subcommand(1);

  std::string config, out;
  Seed seed = 0;
  unsigned workers = 1;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset, its true weights and a metadata sidecar");
  gen->add_option("--config", config, "Dataset config (YAML)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "Override the config seed");

  FitOptions fit;
  std::string method = "boats";
  double lambda = 0.0;
  auto* fitc = app.add_subcommand("fit", "Fit a linear model to a CSV dataset");
  fitc->add_option("--data", fit.data_path, "Dataset CSV with a header row")->required()->check(CLI::ExistingFile);
  fitc->add_option("--out", out, "Output directory")->required();
  fitc->add_option("--method", method, "ols, ridge, lasso, elastic_net or boats")->capture_default_str();
  fitc->add_option("--response", fit.response, "Response column name")->capture_default_str();
  auto* lambda_opt = fitc->add_option("--lambda", lambda, "Fixed meta-parameter (skips the sweep)");
  fitc->add_option("--select-fraction", fit.select_fraction)->capture_default_str();
  fitc->add_option("--test-fraction", fit.test_fraction, "Held-out fraction for R^2 (0 = none)")->capture_default_str();
  fitc->add_option("--iterations", fit.iterations, "Bootstrap iterations")->capture_default_str()->check(CLI::PositiveNumber);
  fitc->add_option("--permutations", fit.n_permutations, "Permutations for the null weights")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fitc->add_option("--seed", fit.seed)->capture_default_str();
  fitc->add_option("--workers", fit.workers)->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "Run a grid of bootstrapped comparisons into a results CSV");
  bench->add_option("--config", config, "Grid config (YAML)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out, "Results CSV (appended, resumable)")->required();
  auto* bench_seed = bench->add_option("--seed", seed, "Override master_seed");
  bench->add_option("--workers", workers, "Parallel workers")->capture_default_str();

  std::string preset_name, scale = "full";
  auto* pre = app.add_subcommand("presets", "Print the grid config of a figure reproduction");
  pre->add_option("name", preset_name, "fig2, fig3, fig4, fig5 or desk")->required();
  pre->add_option("--scale", scale, "full or desk")->check(CLI::IsMember({"full", "desk"}))->capture_default_str();
  pre->add_option("--out", out, "Write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto files = cmd_generate(parse_dataset_config(read_file(config)), out, seed_override(gen_seed, seed));
      std::cout << "wrote " << files.samples << " x " << files.features << " dataset to " << out << '\n';
    } else if (*fitc) {
      const auto m = parse_method(method);
      if (!m) throw std::invalid_argument("unknown method '" + method + "'");
      fit.method = *m;
      if (lambda_opt->count()) fit.lambda = lambda;
      const auto res = cmd_fit(fit, out);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "fit " << method << " on " << res.samples << " x " << res.features
                << ", meta-parameter " << format_double(res.meta_parameter) << ", "
                << count_nonzero(res.weights) << " nonzero weights\n";
    } else if (*bench) {
      const auto res = cmd_benchmark(parse_grid_config(read_file(config)), out, workers, seed_override(bench_seed, seed));
      std::size_t failed = 0;
      for (const auto& r : res.rows) failed += !r.failure.empty();
      std::cout << "computed " << res.computed << " row(s), skipped " << res.skipped << " existing";
      if (failed) std::cout << ", " << failed << " failed";
      std::cout << '\n';
    } else if (*pre) {
      const auto text = grid_config_yaml(preset(preset_name, scale == "desk" ? PresetScale::Desk : PresetScale::Full));
      if (out.empty()) std::cout << text;
      else write_text(out, text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
