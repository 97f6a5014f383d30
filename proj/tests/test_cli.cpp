#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "boats/cli/commands.hpp"

using namespace boats;
using namespace boats::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("boats_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

ExperimentGrid tiny_grid() {
  ExperimentGrid g;
  g.k = 4;
  g.iterations = 3;
  g.master_seed = 9;
  g.distributions = {Distribution::Laplace};
  g.sparsities = {0.5};
  g.sample_ratios = {5.0};
  g.noise_factors = {0.2};
  g.methods = {Method::Ridge, Method::Lasso, Method::ElasticNet, Method::BoATS};
  g.n_permutations = 10;
  g.lambda_points = 4;
  g.fine_points = 2;
  g.threshold_points = 8;
  return g;
}

int run_cli(const std::string& args) {
  return std::system((std::string(BOATS_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
}

}  // namespace

TEST(DatasetConfig, ParsesRequiredAndOptionalKeys) {
  const auto cfg = parse_dataset_config(
      "distribution: laplace\nk: 12\nsparsity: 0.5\nsample_ratio: 3\nseed: 7\nnoise_factor: 0.1\ncluster_sd: 0.2\n");
  EXPECT_EQ(cfg.spec.distribution, Distribution::Laplace);
  EXPECT_EQ(cfg.spec.k, 12);
  EXPECT_EQ(cfg.sample_ratio, 3.0);
  EXPECT_EQ(cfg.spec.seed, 7u);
  EXPECT_EQ(cfg.spec.params.cluster_sd, 0.2);
  EXPECT_EQ(parse_dataset_config(dataset_config_yaml(cfg)).spec.params.cluster_sd, 0.2);
}

TEST(DatasetConfig, RejectsUnknownMissingAndInvalid) {
  const std::string base = "distribution: laplace\nk: 12\nsample_ratio: 3\nseed: 7\n";
  EXPECT_THROW(parse_dataset_config(base + "sparsity: 0.5\ncolour: red\n"), ConfigError);
  EXPECT_THROW(parse_dataset_config(base), ConfigError);
  try {
    parse_dataset_config(base + "sparsity: 1.0\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sparsity"), std::string::npos);
  }
  EXPECT_THROW(parse_dataset_config(base + "sparsity: 0.5\nk: 0\n"), ConfigError);
}

TEST(GridConfig, RoundTripsThroughYaml) {
  const auto g = tiny_grid();
  const auto back = parse_grid_config(grid_config_yaml(g));
  EXPECT_EQ(back.k, g.k);
  EXPECT_EQ(back.methods, g.methods);
  EXPECT_EQ(back.threshold_points, 8);
  EXPECT_EQ(back.sparsities, g.sparsities);
  EXPECT_THROW(parse_grid_config(grid_config_yaml(g) + "methods_typo: [ols]\n"), ConfigError);
}

TEST(Presets, Contents) {
  const auto fig2 = preset("fig2");
  EXPECT_EQ(fig2.k, 100);
  EXPECT_EQ(fig2.iterations, 100);
  EXPECT_EQ(fig2.distributions, std::vector{Distribution::SymmetricIncreasingExponential});
  EXPECT_EQ(expand_grid(fig2).size(), 4u);
  EXPECT_EQ(expand_grid(preset("fig3")).size(), 6u * 5u * 4u);
  EXPECT_EQ(expand_grid(preset("fig4")).size(), 4u * 6u * 4u);
  const auto fig5 = preset("fig5", PresetScale::Desk);
  EXPECT_EQ(fig5.k, 20);
  EXPECT_EQ(fig5.noise_factors.size(), 6u);
  EXPECT_EQ(preset("desk").k, 20);
  EXPECT_THROW(preset("fig9"), ConfigError);
  EXPECT_EQ(parse_grid_config(grid_config_yaml(fig5)).noise_factors, fig5.noise_factors);
}

TEST(Results, GoldenHeader) {
  EXPECT_EQ(results_header(),
            "schema_version,cell_hash,distribution,k,sparsity,sample_ratio,noise_factor,d,m,method,iterations,"
            "master_seed,r2_mean,r2_sd,rms_mean,rms_sd,variability_mean,variability_sd,bic_mean,bic_sd,"
            "test_rss_mean,test_rss_sd,support_ratio_mean,support_ratio_sd,meta_mean,meta_sd,consensus_meta,"
            "rms_consensus,nonconverged_fits,failures,failure");
}

TEST(Results, RowRoundTrip) {
  ResultRow r;
  r.cell_hash = "00ff";
  r.k = 20;
  r.sparsity = 2.0 / 3.0;
  r.rms = {0.1, 1e-17};
  r.failure = "bad, thing";
  const auto back = parse_row(format_row(r));
  EXPECT_EQ(back.sparsity, r.sparsity);
  EXPECT_EQ(back.rms.sd, 1e-17);
  EXPECT_TRUE(std::isnan(back.r2.mean));
  EXPECT_EQ(format_row(back), format_row(r));
}

TEST(Generate, Fig2ShapeAndReproducibleBytes) {
  DatasetConfig cfg;
  cfg.spec = {Distribution::SymmetricIncreasingExponential, 100, 2.0 / 3.0, 0.2, 5, {}};
  cfg.sample_ratio = 5.0;
  const auto dir = scratch("generate");
  const auto files = cmd_generate(cfg, dir / "a");
  EXPECT_EQ(files.samples, 1500);
  EXPECT_EQ(files.features, 300);
  const auto loaded = load_dataset(files.data.string());
  EXPECT_EQ(loaded.data.samples(), 1500);
  EXPECT_EQ(loaded.data.features(), 300);
  EXPECT_EQ(count_nonzero(read_column(files.truth.string())), 100);

  cmd_generate(cfg, dir / "b");
  EXPECT_EQ(slurp(dir / "a" / "data.csv"), slurp(dir / "b" / "data.csv"));
  // The metadata sidecar regenerates the same data.
  cmd_generate(parse_dataset_config(slurp(files.meta)), dir / "c");
  EXPECT_EQ(slurp(dir / "a" / "data.csv"), slurp(dir / "c" / "data.csv"));
  cmd_generate(cfg, dir / "d", Seed{6});
  EXPECT_NE(slurp(dir / "a" / "data.csv"), slurp(dir / "d" / "data.csv"));
}

TEST(Fit, NoiselessBoatsMatchesTruth) {
  DatasetConfig cfg;
  cfg.spec = {Distribution::AsymmetricClustered, 10, 0.5, 0.0, 3, {}};
  cfg.sample_ratio = 5.0;
  const auto dir = scratch("fit_boats");
  const auto files = cmd_generate(cfg, dir);
  FitOptions opt;
  opt.data_path = files.data.string();
  opt.n_permutations = 30;
  const auto out = cmd_fit(opt, dir / "fit");
  const Vector truth = read_column(files.truth.string());
  EXPECT_LE((read_column((dir / "fit" / "weights.csv").string()) - truth).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((out.weights - truth).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_TRUE(fs::exists(dir / "fit" / "report.yaml"));
}

TEST(Fit, FixedLambdaRidgeMatchesDirectFit) {
  const auto dir = scratch("fit_ridge");
  const Index m = 20;
  Matrix x(m, 2);
  Vector y(m);
  for (Index i = 0; i < m; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = static_cast<double>((i * 7) % 5);
    y(i) = 0.5 * static_cast<double>(i) - static_cast<double>(i % 3);
  }
  {
    std::ofstream f(dir / "d.csv");
    f << "a,b,target\n";
    for (Index i = 0; i < m; ++i) f << x(i, 0) << ',' << x(i, 1) << ',' << y(i) << '\n';
  }
  FitOptions opt;
  opt.data_path = (dir / "d.csv").string();
  opt.response = "target";
  opt.method = Method::Ridge;
  opt.lambda = 0.5;
  const auto out = cmd_fit(opt, dir / "fit");

  // One bootstrap iteration trains on its train split with penalty m_train * lambda.
  const SplitFractions f{0.9, 0.1, 0.0};
  const auto split = boats::detail::split_data(Dataset(x, y), f, derive_seed(opt.seed, {tag("iteration"), 0}));
  const auto ref = ridge_fit(split.train, static_cast<double>(split.train.samples()) * 0.5).weights;
  EXPECT_LE((out.weights - ref).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(out.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(Fit, MissingResponseColumnIsNamed) {
  const auto dir = scratch("fit_missing");
  {
    std::ofstream f(dir / "d.csv");
    f << "a,b\n1,2\n3,4\n";
  }
  try {
    load_dataset((dir / "d.csv").string(), "y");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos) << e.what();
  }
}

TEST(Csv, RaggedAndNonNumericRowsReportLocation) {
  const auto dir = scratch("csv");
  {
    std::ofstream f(dir / "r.csv");
    f << "a,y\n1,2\n3\n";
  }
  {
    std::ofstream f(dir / "n.csv");
    f << "a,y\n1,2\nx,4\n";
  }
  for (const char* name : {"r.csv", "n.csv"}) {
    try {
      load_dataset((dir / name).string());
      FAIL() << name;
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
    }
  }
}

TEST(Benchmark, RowCountsAndResume) {
  const auto dir = scratch("bench");
  auto g = tiny_grid();
  const auto first = cmd_benchmark(g, dir / "r.csv");
  EXPECT_EQ(first.computed, 4u);
  EXPECT_EQ(read_results((dir / "r.csv").string()).size(), 4u);
  for (const auto& row : first.rows) EXPECT_TRUE(row.failure.empty()) << row.failure;

  const std::string before = slurp(dir / "r.csv");
  const auto again = cmd_benchmark(g, dir / "r.csv");
  EXPECT_EQ(again.computed, 0u);
  EXPECT_EQ(again.skipped, 4u);
  EXPECT_EQ(slurp(dir / "r.csv"), before);

  g.sparsities = {0.5, 0.25};
  g.sample_ratios = {5.0, 3.0};
  const auto grown = cmd_benchmark(g, dir / "r.csv");
  EXPECT_EQ(grown.computed, 12u);
  const auto rows = read_results((dir / "r.csv").string());
  EXPECT_EQ(rows.size(), 16u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), row_less));

  // A fresh run of the grown grid gives the same bytes as the resumed one.
  cmd_benchmark(g, dir / "fresh.csv");
  EXPECT_EQ(slurp(dir / "fresh.csv"), slurp(dir / "r.csv"));
}

TEST(Benchmark, WorkerCountDoesNotChangeBytes) {
  const auto dir = scratch("bench_workers");
  const auto g = tiny_grid();
  cmd_benchmark(g, dir / "w1.csv", 1);
  cmd_benchmark(g, dir / "w8.csv", 8);
  EXPECT_EQ(slurp(dir / "w1.csv"), slurp(dir / "w8.csv"));
}

TEST(Executable, ExitCodes) {
  const auto dir = scratch("exe");
  {
    std::ofstream f(dir / "cfg.yaml");
    f << "distribution: uniform\nk: 3\nsparsity: 0.4\nsample_ratio: 4\nseed: 1\n";
  }
  {
    std::ofstream f(dir / "bad.yaml");
    f << "distribution: uniform\nk: 3\nsparsity: 1.0\nsample_ratio: 4\nseed: 1\n";
  }
  EXPECT_EQ(run_cli("generate --config " + (dir / "cfg.yaml").string() + " --out " + (dir / "gen").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "gen" / "data.csv"));
  EXPECT_EQ(run_cli("fit --data " + (dir / "gen" / "data.csv").string() + " --out " + (dir / "fit").string() +
                    " --method lasso --permutations 5"),
            0);
  EXPECT_TRUE(fs::exists(dir / "fit" / "weights.csv"));
  EXPECT_EQ(run_cli("presets fig4 --scale desk"), 0);
  EXPECT_NE(run_cli("generate --config " + (dir / "bad.yaml").string() + " --out " + (dir / "x").string()), 0);
  EXPECT_NE(run_cli("presets nope"), 0);
  EXPECT_NE(run_cli("frobnicate"), 0);
}
