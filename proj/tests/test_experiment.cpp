#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "idrl/experiment.hpp"

using Catch::Approx;
using namespace idrl;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "idrl_exp_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

ExperimentConfig tiny_experiment(const std::string& out_name) {
  ExperimentConfig cfg;
  cfg.synthetic.n_samples = 150;
  cfg.synthetic.n_confounders = 4;
  cfg.synthetic.n_instrumental = 2;
  cfg.synthetic.n_irrelevant = 3;
  cfg.synthetic.n_adjustment = 4;
  cfg.synthetic.q = 0.5;
  cfg.pool_multiplier = 2;
  cfg.model.rep_layers = {8};
  cfg.model.rep_dim = 4;
  cfg.model.head_layers = {4};
  cfg.model.phi_layers = {4};
  cfg.model.epochs = 15;
  cfg.replications = 2;
  cfg.seed_base = 500;
  cfg.knn_k = 3;
  cfg.out_dir = fresh_dir(out_name).string();
  return cfg;
}

}  // namespace

TEST_CASE("run_benchmark writes reproducible reports and a mean aggregate") {
  ExperimentConfig cfg = tiny_experiment("bench");
  cfg.methods = {Method::Idrl, Method::TarnetEquiv, Method::Knn};
  BenchmarkResult first = run_benchmark(cfg);

  // one file per (method, split, replication)
  for (const char* method : {"idrl", "tarnet_equiv", "knn"})
    for (const char* split_label : {"in_sample", "out_sample"})
      for (int rep = 0; rep < 2; ++rep) {
        fs::path file = fs::path(cfg.out_dir) /
                        ("report_" + std::string(method) + "_" + split_label +
                         "_rep" + std::to_string(rep) + ".json");
        REQUIRE(fs::exists(file));
        json doc = load_json(file.string());
        REQUIRE(doc.at("method") == method);
        // every artifact embeds the resolved config and seeds
        REQUIRE(doc.contains("config"));
        REQUIRE(doc.at("config").at("model").contains("epochs"));
        REQUIRE(doc.at("seeds").contains("model"));
      }

  // aggregate = arithmetic mean of the per-replication values, to 1e-12
  json agg = load_json((fs::path(cfg.out_dir) / "aggregate.json").string());
  for (const char* method : {"idrl", "tarnet_equiv", "knn"}) {
    double acc = 0.0;
    for (int rep = 0; rep < 2; ++rep) {
      json doc = load_json((fs::path(cfg.out_dir) /
                            ("report_" + std::string(method) +
                             "_out_sample_rep" + std::to_string(rep) + ".json"))
                               .string());
      acc += doc.at("report").at("sqrt_pehe").get<double>();
    }
    double mean = acc / 2.0;
    double agg_value =
        agg.at("methods").at(method).at("out_sample").at("sqrt_pehe").get<double>();
    REQUIRE(std::abs(agg_value - mean) <= 1e-12);
  }

  // identical rerun reproduces identical bytes
  std::string before =
      slurp(fs::path(cfg.out_dir) / "report_idrl_out_sample_rep0.json");
  std::string agg_before = slurp(fs::path(cfg.out_dir) / "aggregate.json");
  BenchmarkResult second = run_benchmark(cfg);
  REQUIRE(slurp(fs::path(cfg.out_dir) / "report_idrl_out_sample_rep0.json") == before);
  REQUIRE(slurp(fs::path(cfg.out_dir) / "aggregate.json") == agg_before);
}

TEST_CASE("run_ablation emits the three variants plus tarnet when requested") {
  ExperimentConfig cfg = tiny_experiment("ablate");
  cfg.ablation_include_tarnet = true;
  AblationResult result = run_ablation(cfg);
  REQUIRE(result.variants.size() == 4);
  REQUIRE(result.variants[0].label == "idrl");
  REQUIRE(result.variants[1].label == "idrl_no_infomax");
  REQUIRE(result.variants[2].label == "idrl_no_domain_mi");
  REQUIRE(result.variants[3].label == "tarnet_equiv");

  fs::path table = fs::path(cfg.out_dir) / "ablation.csv";
  REQUIRE(fs::exists(table));
  std::string csv = slurp(table);
  REQUIRE(count_lines(csv) == 1 + 4 * 2);  // header + variants x splits

  // rerun is bit-identical
  std::string before = slurp(fs::path(cfg.out_dir) / "ablation_aggregate.json");
  run_ablation(cfg);
  REQUIRE(slurp(fs::path(cfg.out_dir) / "ablation_aggregate.json") == before);

  // per-replication reports exist for every variant
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "report_idrl_no_infomax_in_sample_rep0.json"));
  REQUIRE(fs::exists(fs::path(cfg.out_dir) / "report_tarnet_equiv_out_sample_rep1.json"));
}

TEST_CASE("run_bias_sweep emits q x methods x replications rows, q=0 matches benchmark") {
  ExperimentConfig cfg = tiny_experiment("sweep");
  cfg.methods = {Method::Idrl, Method::TarnetEquiv};
  std::vector<double> qs{0.0, 0.5, 1.0};
  SweepResult sweep = run_bias_sweep(cfg, qs);
  REQUIRE(sweep.rows.size() == qs.size() * 2 * cfg.replications);

  std::string csv = slurp(fs::path(cfg.out_dir) / "bias_sweep.csv");
  REQUIRE(count_lines(csv) == 1 + sweep.rows.size());

  // the q = 0 entries coincide with a plain benchmark at q = 0, same seeds
  ExperimentConfig bench_cfg = cfg;
  bench_cfg.synthetic.q = 0.0;
  bench_cfg.out_dir = fresh_dir("sweep_ref").string();
  BenchmarkResult bench = run_benchmark(bench_cfg);
  for (const SweepRow& row : sweep.rows) {
    if (row.q != 0.0) continue;
    for (const MethodRun& run : bench.replications[row.replication].runs) {
      if (run.method != row.method) continue;
      REQUIRE(row.sqrt_pehe == *run.out_sample.sqrt_pehe);
      REQUIRE(row.eps_ate == *run.out_sample.eps_ate);
    }
  }
}

TEST_CASE("run_grid: row count and 1x1x1 reduction to the benchmark") {
  ExperimentConfig cfg = tiny_experiment("grid");
  cfg.methods = {Method::Idrl, Method::TarnetEquiv};

  GridResult grid = run_grid(cfg, {CorrelationFamily::Low}, {2}, {3});
  REQUIRE(grid.cells.size() == cfg.replications);  // 1x1x1 grid

  // same spec through run_benchmark gives identical out-of-sample numbers
  ExperimentConfig bench_cfg = cfg;
  bench_cfg.synthetic.correlation_family = CorrelationFamily::Low;
  bench_cfg.synthetic.n_instrumental = 2;
  bench_cfg.synthetic.n_irrelevant = 3;
  bench_cfg.out_dir = fresh_dir("grid_ref").string();
  BenchmarkResult bench = run_benchmark(bench_cfg);
  for (const GridCell& cell : grid.cells) {
    const MethodRun& idrl_run = bench.replications[cell.replication].runs[0];
    REQUIRE(cell.by_method[0].first == "idrl");
    REQUIRE(*cell.by_method[0].second.sqrt_pehe == *idrl_run.out_sample.sqrt_pehe);
  }

  // a 2x2x1 grid has cells x replications rows in the CSV
  ExperimentConfig cfg2 = tiny_experiment("grid2");
  cfg2.replications = 1;
  cfg2.model.epochs = 5;
  GridResult grid2 = run_grid(cfg2, {CorrelationFamily::Independent, CorrelationFamily::High},
                              {2, 4}, {3});
  REQUIRE(grid2.cells.size() == 4);
  std::string csv = slurp(fs::path(cfg2.out_dir) / "grid.csv");
  REQUIRE(count_lines(csv) == 1 + 4);
}

TEST_CASE("worker parallelism does not change results") {
  ExperimentConfig cfg = tiny_experiment("threads1");
  cfg.methods = {Method::Idrl};
  cfg.model.epochs = 8;
  run_benchmark(cfg);
  json serial = load_json(
      (fs::path(cfg.out_dir) / "report_idrl_out_sample_rep1.json").string());

  setenv("IDRL_THREADS", "2", 1);
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = fresh_dir("threads2").string();
  run_benchmark(cfg2);
  unsetenv("IDRL_THREADS");
  json parallel = load_json(
      (fs::path(cfg2.out_dir) / "report_idrl_out_sample_rep1.json").string());
  // identical numbers; only the echoed out_dir may differ
  REQUIRE(serial.at("report") == parallel.at("report"));
  REQUIRE(serial.at("seeds") == parallel.at("seeds"));
}

TEST_CASE("experiment config JSON round-trips") {
  ExperimentConfig cfg = tiny_experiment("cfg");
  cfg.methods = {Method::Idrl, Method::Knn};
  cfg.q_values = {0.0, 1.0};
  cfg.grid_families = {CorrelationFamily::High};
  json j = experiment_config_to_json(cfg);
  ExperimentConfig back = experiment_config_from_json(j);
  REQUIRE(back.synthetic.n_samples == cfg.synthetic.n_samples);
  REQUIRE(back.replications == cfg.replications);
  REQUIRE(back.methods == cfg.methods);
  REQUIRE(back.q_values == cfg.q_values);
  REQUIRE(back.grid_families == cfg.grid_families);
  REQUIRE(back.model.rep_layers == cfg.model.rep_layers);
  REQUIRE(back.out_dir == cfg.out_dir);

  // CSV source variant
  json csv_cfg = {{"dataset", {{"type", "csv"}, {"path", "data.csv"}}}};
  ExperimentConfig from_csv = experiment_config_from_json(csv_cfg);
  REQUIRE_FALSE(from_csv.synthetic_source);
  REQUIRE(from_csv.csv_path == "data.csv");
}
