#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "idrl/csv.hpp"
#include "idrl/dataset.hpp"
#include "idrl/metrics.hpp"
#include "idrl/model.hpp"
#include "idrl/serialize.hpp"
#include "idrl/synthetic.hpp"

namespace idrl {

enum class Method { Idrl, TarnetEquiv, Knn };

inline std::string method_label(Method m) {
  switch (m) {
    case Method::Idrl: return "idrl";
    case Method::TarnetEquiv: return "tarnet_equiv";
    case Method::Knn: return "knn";
  }
  return "unknown";
}

inline Method method_from_label(const std::string& label) {
  if (label == "idrl") return Method::Idrl;
  if (label == "tarnet_equiv") return Method::TarnetEquiv;
  if (label == "knn") return Method::Knn;
  throw std::invalid_argument("unknown method: " + label);
}

struct ExperimentConfig {
  // Dataset source: a synthetic spec or a CSV file.
  bool synthetic_source = true;
  SyntheticSpec synthetic;
  std::size_t pool_multiplier = 3;  // pool size = n_samples * multiplier
  std::string csv_path;

  IdrlConfig model;
  SplitSpec split;
  std::size_t replications = 10;
  std::uint64_t seed_base = 1000;
  std::vector<Method> methods{Method::Idrl, Method::TarnetEquiv};
  std::size_t knn_k = 5;
  std::string out_dir = "results";

  bool ablation_include_tarnet = false;
  std::vector<double> q_values{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<CorrelationFamily> grid_families{
      CorrelationFamily::Independent, CorrelationFamily::Low,
      CorrelationFamily::Medium, CorrelationFamily::High};
  std::vector<std::size_t> grid_instrumental{10, 20};
  std::vector<std::size_t> grid_irrelevant{20, 40};

  void validate() const {
    if (replications < 1)
      throw std::invalid_argument("experiment: replications must be >= 1");
    if (synthetic_source) {
      synthetic.validate();
      if (pool_multiplier < 1)
        throw std::invalid_argument("experiment: pool multiplier must be >= 1");
    } else if (csv_path.empty()) {
      throw std::invalid_argument("experiment: csv source needs a path");
    }
    if (methods.empty())
      throw std::invalid_argument("experiment: no methods selected");
  }
};

inline json experiment_config_to_json(const ExperimentConfig& c) {
  json dataset;
  if (c.synthetic_source)
    dataset = json{{"type", "synthetic"},
                   {"spec", synthetic_spec_to_json(c.synthetic)},
                   {"pool_multiplier", c.pool_multiplier}};
  else
    dataset = json{{"type", "csv"}, {"path", c.csv_path}};
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_label(m));
  json families = json::array();
  for (CorrelationFamily f : c.grid_families)
    families.push_back(correlation_family_label(f));
  return json{{"dataset", dataset},
              {"model", config_to_json(c.model)},
              {"split", split_spec_to_json(c.split)},
              {"replications", c.replications},
              {"seed_base", c.seed_base},
              {"methods", methods},
              {"knn_k", c.knn_k},
              {"out_dir", c.out_dir},
              {"ablation", json{{"include_tarnet", c.ablation_include_tarnet}}},
              {"sweep", json{{"q_values", c.q_values}}},
              {"grid", json{{"families", families},
                            {"instrumental_counts", c.grid_instrumental},
                            {"irrelevant_counts", c.grid_irrelevant}}}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    const std::string type = d.value("type", "synthetic");
    if (type == "synthetic") {
      c.synthetic_source = true;
      if (d.contains("spec")) c.synthetic = synthetic_spec_from_json(d.at("spec"));
      c.pool_multiplier = d.value("pool_multiplier", c.pool_multiplier);
    } else if (type == "csv") {
      c.synthetic_source = false;
      c.csv_path = d.at("path").get<std::string>();
    } else {
      throw SchemaError("unknown dataset source type: " + type);
    }
  }
  if (j.contains("model")) c.model = config_from_json(j.at("model"));
  if (j.contains("split")) c.split = split_spec_from_json(j.at("split"));
  if (j.contains("replications")) c.replications = j.at("replications").get<std::size_t>();
  if (j.contains("seed_base")) c.seed_base = j.at("seed_base").get<std::uint64_t>();
  if (j.contains("methods")) {
    c.methods.clear();
    for (const json& m : j.at("methods"))
      c.methods.push_back(method_from_label(m.get<std::string>()));
  }
  if (j.contains("knn_k")) c.knn_k = j.at("knn_k").get<std::size_t>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("ablation"))
    c.ablation_include_tarnet = j.at("ablation").value("include_tarnet", false);
  if (j.contains("sweep") && j.at("sweep").contains("q_values"))
    c.q_values = j.at("sweep").at("q_values").get<std::vector<double>>();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (g.contains("families")) {
      c.grid_families.clear();
      for (const json& f : g.at("families"))
        c.grid_families.push_back(correlation_family_from_label(f.get<std::string>()));
    }
    if (g.contains("instrumental_counts"))
      c.grid_instrumental = g.at("instrumental_counts").get<std::vector<std::size_t>>();
    if (g.contains("irrelevant_counts"))
      c.grid_irrelevant = g.at("irrelevant_counts").get<std::vector<std::size_t>>();
  }
  return c;
}

// Worker cap from IDRL_THREADS; default 1 keeps everything sequential.
inline std::size_t worker_count(std::size_t tasks) {
  std::size_t workers = 1;
  if (const char* env = std::getenv("IDRL_THREADS")) {
    long parsed = std::atol(env);
    if (parsed > 1) workers = static_cast<std::size_t>(parsed);
  }
  return std::min(workers, std::max<std::size_t>(tasks, 1));
}

// Runs fn(0..n-1); tasks own their state and write to preallocated slots, so
// results do not depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct PreparedData {
  Dataset train, valid, test;
  json seeds;
};

// One replication's data. For synthetic sources a pool is generated and then
// subsampled through the bias amplifier at the spec's q (q = 0 is a uniform
// subsample), so runs at different q are comparable under matching seeds.
inline PreparedData prepare_data(const ExperimentConfig& cfg,
                                 const SyntheticSpec& spec, std::size_t rep) {
  const std::uint64_t rep_seed = cfg.seed_base + rep;
  PreparedData out;
  out.seeds = json{{"seed_base", cfg.seed_base}, {"replication", rep},
                   {"replication_seed", rep_seed}};
  Dataset data;
  if (cfg.synthetic_source) {
    const std::uint64_t gen_seed = derive_seed(rep_seed, 10);
    const std::uint64_t bias_seed = derive_seed(rep_seed, 11);
    SyntheticSpec pool_spec = spec;
    pool_spec.n_samples = spec.n_samples * cfg.pool_multiplier;
    GenerateResult pool = generate(pool_spec, gen_seed);
    BiasedSample sample =
        amplify_bias(pool.data, pool.truth, spec.q, spec.n_samples, bias_seed);
    data = std::move(sample.data);
    out.seeds["generate"] = gen_seed;
    out.seeds["bias"] = bias_seed;
    out.seeds["coefficient"] = spec.coefficient_seed;
  } else {
    data = load_dataset_csv(cfg.csv_path);
  }
  SplitSpec split_spec = cfg.split;
  split_spec.seed = derive_seed(rep_seed, 12);
  out.seeds["split"] = split_spec.seed;
  out.seeds["model"] = derive_seed(rep_seed, 13);
  SplitResult parts = split(data, split_spec);
  out.train = std::move(parts.train);
  out.valid = std::move(parts.valid);
  out.test = std::move(parts.test);
  return out;
}

// Metrics for one prediction set against one dataset; fills whatever the
// available ground truth supports.
inline MetricsReport compute_report(const OutcomePrediction& pred,
                                    const Dataset& ds,
                                    const std::string& split_label) {
  MetricsReport report;
  report.split_label = split_label;
  report.factual_rmse = rmse(pred.y_f, ds.y_f);
  if (ds.has_ground_truth()) {
    std::vector<double> ite_true = ds.true_ite();
    std::vector<double> ite_pred(pred.y1.size());
    for (std::size_t i = 0; i < ite_pred.size(); ++i)
      ite_pred[i] = pred.y1[i] - pred.y0[i];
    PeheResult p = pehe(ite_true, ite_pred);
    report.sqrt_pehe = p.sqrt_pehe;
    report.eps_ate = ate_error(ite_true, ite_pred);
  }
  if (ds.e_flag) {
    try {
      PolicyRiskResult pol = policy_risk(pred.y1, pred.y0, ds.y_f, ds.t, *ds.e_flag);
      report.r_pol = pol.value;
      report.policy_cell_empty = pol.treated_cell_empty || pol.control_cell_empty;
    } catch (const UnsupportedMetricError&) {
      // no randomized units in this split; leave unset
    }
    try {
      report.eps_att = att_error(pred.y1, pred.y0, ds.y_f, ds.t, *ds.e_flag);
    } catch (const UnsupportedMetricError&) {
    }
  }
  return report;
}

struct MethodRun {
  std::string method;
  MetricsReport in_sample;
  MetricsReport out_sample;
};

// Train/evaluate one method on prepared data. `model_override` lets the
// ablation variants reuse the same data and seeds.
inline MethodRun run_method(const ExperimentConfig& cfg, Method method,
                            const PreparedData& data,
                            const IdrlConfig* model_override = nullptr,
                            const std::string& label_override = "") {
  MethodRun run;
  run.method = label_override.empty() ? method_label(method) : label_override;
  Dataset insample = concat(data.train, data.valid);

  if (method == Method::Knn) {
    Scaler scaler = fit_scaler(data.train.X);
    Dataset train_std = data.train;
    train_std.X = scaler.transform(data.train.X);
    KnnPrediction in_pred =
        knn_estimator(train_std, scaler.transform(insample.X), cfg.knn_k);
    KnnPrediction out_pred =
        knn_estimator(train_std, scaler.transform(data.test.X), cfg.knn_k);
    auto to_outcome = [](const KnnPrediction& knn, const std::vector<int>& t) {
      OutcomePrediction pred;
      pred.y0 = knn.y0;
      pred.y1 = knn.y1;
      pred.y_f.resize(knn.y0.size());
      for (std::size_t i = 0; i < knn.y0.size(); ++i)
        pred.y_f[i] = t[i] == 1 ? knn.y1[i] : knn.y0[i];
      return pred;
    };
    run.in_sample = compute_report(to_outcome(in_pred, insample.t), insample, "in_sample");
    run.out_sample = compute_report(to_outcome(out_pred, data.test.t), data.test, "out_sample");
    return run;
  }

  IdrlConfig model_cfg = model_override ? *model_override : cfg.model;
  if (method == Method::TarnetEquiv) {
    model_cfg.disable_infomax = true;
    model_cfg.disable_domain_mi = true;
  }
  model_cfg.seed = data.seeds.at("model").get<std::uint64_t>();
  FitResult fitted = fit(model_cfg, data.train, data.valid);
  run.in_sample =
      compute_report(predict_dataset(fitted.params, insample), insample, "in_sample");
  run.out_sample =
      compute_report(predict_dataset(fitted.params, data.test), data.test, "out_sample");
  return run;
}

struct ReplicationResult {
  std::size_t replication = 0;
  json seeds;
  std::vector<MethodRun> runs;
};

namespace detail {

inline json aggregate_reports(const std::vector<const MetricsReport*>& reports) {
  auto mean_of = [&](auto getter) -> json {
    double acc = 0.0;
    std::size_t count = 0;
    for (const MetricsReport* r : reports) {
      auto v = getter(*r);
      if (v) {
        acc += *v;
        ++count;
      }
    }
    if (count == 0 || count != reports.size()) return nullptr;
    return acc / static_cast<double>(count);
  };
  double rmse_acc = 0.0;
  bool any_empty_cell = false;
  for (const MetricsReport* r : reports) {
    rmse_acc += r->factual_rmse;
    any_empty_cell = any_empty_cell || r->policy_cell_empty;
  }
  json out;
  out["sqrt_pehe"] = mean_of([](const MetricsReport& r) { return r.sqrt_pehe; });
  out["eps_ate"] = mean_of([](const MetricsReport& r) { return r.eps_ate; });
  out["r_pol"] = mean_of([](const MetricsReport& r) { return r.r_pol; });
  out["eps_att"] = mean_of([](const MetricsReport& r) { return r.eps_att; });
  out["factual_rmse"] = rmse_acc / static_cast<double>(reports.size());
  out["policy_cell_empty"] = any_empty_cell;
  return out;
}

inline void write_replication_reports(const ExperimentConfig& cfg,
                                      const ReplicationResult& rep,
                                      const std::string& out_dir) {
  const json cfg_json = experiment_config_to_json(cfg);
  for (const MethodRun& run : rep.runs) {
    for (const MetricsReport* report : {&run.in_sample, &run.out_sample}) {
      json doc{{"format_version", kReportFormatVersion},
               {"method", run.method},
               {"replication", rep.replication},
               {"seeds", rep.seeds},
               {"config", cfg_json},
               {"report", report_to_json(*report)}};
      const std::string name = "report_" + run.method + "_" + report->split_label +
                               "_rep" + std::to_string(rep.replication) + ".json";
      save_json(doc, (std::filesystem::path(out_dir) / name).string());
    }
  }
}

inline json aggregate_over_replications(const std::vector<ReplicationResult>& reps) {
  json methods;
  if (reps.empty()) return methods;
  for (std::size_t mi = 0; mi < reps.front().runs.size(); ++mi) {
    const std::string& label = reps.front().runs[mi].method;
    std::vector<const MetricsReport*> ins, outs;
    for (const ReplicationResult& rep : reps) {
      ins.push_back(&rep.runs[mi].in_sample);
      outs.push_back(&rep.runs[mi].out_sample);
    }
    methods[label] = json{{"in_sample", aggregate_reports(ins)},
                          {"out_sample", aggregate_reports(outs)}};
  }
  return methods;
}

}  // namespace detail

struct BenchmarkResult {
  std::vector<ReplicationResult> replications;
  json aggregate;
};

// Per-replication training and evaluation of every configured method, plus
// the arithmetic mean over replications. Each run writes one JSON report per
// (method, split, replication) that embeds the resolved config and seeds.
inline BenchmarkResult run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  BenchmarkResult result;
  result.replications.resize(cfg.replications);
  parallel_for(cfg.replications, [&](std::size_t rep) {
    PreparedData data = prepare_data(cfg, cfg.synthetic, rep);
    ReplicationResult& slot = result.replications[rep];
    slot.replication = rep;
    slot.seeds = data.seeds;
    for (Method m : cfg.methods) slot.runs.push_back(run_method(cfg, m, data));
  });
  for (const ReplicationResult& rep : result.replications)
    detail::write_replication_reports(cfg, rep, cfg.out_dir);
  result.aggregate =
      json{{"format_version", kReportFormatVersion},
           {"config", experiment_config_to_json(cfg)},
           {"replications", cfg.replications},
           {"methods", detail::aggregate_over_replications(result.replications)}};
  save_json(result.aggregate,
            (std::filesystem::path(cfg.out_dir) / "aggregate.json").string());
  return result;
}

struct AblationVariant {
  std::string label;
  bool disable_infomax = false;
  bool disable_domain_mi = false;
};

struct AblationResult {
  std::vector<ReplicationResult> replications;
  json aggregate;
  std::vector<AblationVariant> variants;
};

// Full model against the two single-term ablations (and optionally the
// both-terms-off regressor), identical data and seeds across variants.
inline AblationResult run_ablation(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  AblationResult result;
  result.variants = {{"idrl", false, false},
                     {"idrl_no_infomax", true, false},
                     {"idrl_no_domain_mi", false, true}};
  if (cfg.ablation_include_tarnet)
    result.variants.push_back({"tarnet_equiv", true, true});

  result.replications.resize(cfg.replications);
  parallel_for(cfg.replications, [&](std::size_t rep) {
    PreparedData data = prepare_data(cfg, cfg.synthetic, rep);
    ReplicationResult& slot = result.replications[rep];
    slot.replication = rep;
    slot.seeds = data.seeds;
    for (const AblationVariant& variant : result.variants) {
      IdrlConfig model_cfg = cfg.model;
      model_cfg.disable_infomax = variant.disable_infomax;
      model_cfg.disable_domain_mi = variant.disable_domain_mi;
      slot.runs.push_back(
          run_method(cfg, Method::Idrl, data, &model_cfg, variant.label));
    }
  });
  for (const ReplicationResult& rep : result.replications)
    detail::write_replication_reports(cfg, rep, cfg.out_dir);
  result.aggregate =
      json{{"format_version", kReportFormatVersion},
           {"config", experiment_config_to_json(cfg)},
           {"replications", cfg.replications},
           {"methods", detail::aggregate_over_replications(result.replications)}};
  save_json(result.aggregate,
            (std::filesystem::path(cfg.out_dir) / "ablation_aggregate.json").string());

  // Plot-ready comparison table.
  std::ofstream table((std::filesystem::path(cfg.out_dir) / "ablation.csv").string());
  table << "variant,split,mean_sqrt_pehe,mean_eps_ate,mean_factual_rmse\n";
  for (const AblationVariant& variant : result.variants) {
    for (const char* split_label : {"in_sample", "out_sample"}) {
      const json& agg = result.aggregate["methods"][variant.label][split_label];
      table << variant.label << ',' << split_label << ','
            << agg["sqrt_pehe"].dump() << ',' << agg["eps_ate"].dump() << ','
            << agg["factual_rmse"].dump() << "\n";
    }
  }
  return result;
}

struct SweepRow {
  double q = 0.0;
  std::string method;
  double sqrt_pehe = 0.0;
  double eps_ate = 0.0;
  std::size_t replication = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // out-of-sample metrics
};

// Bias-robustness series: for each q, subsample through the bias amplifier
// and run the full pipeline; emits q,method,sqrt_pehe,eps_ate,replication.
inline SweepResult run_bias_sweep(const ExperimentConfig& cfg,
                                  const std::vector<double>& q_values) {
  cfg.validate();
  if (q_values.empty()) throw std::invalid_argument("sweep: no q values");
  for (double q : q_values)
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("sweep: q outside [0,1]");
  if (!cfg.synthetic_source)
    throw std::invalid_argument("sweep: needs a synthetic source");
  std::filesystem::create_directories(cfg.out_dir);

  const std::size_t cells = q_values.size() * cfg.replications;
  std::vector<std::vector<MethodRun>> runs(cells);
  parallel_for(cells, [&](std::size_t task) {
    const std::size_t qi = task / cfg.replications;
    const std::size_t rep = task % cfg.replications;
    SyntheticSpec spec = cfg.synthetic;
    spec.q = q_values[qi];
    PreparedData data = prepare_data(cfg, spec, rep);
    for (Method m : cfg.methods) runs[task].push_back(run_method(cfg, m, data));
  });

  SweepResult result;
  for (std::size_t qi = 0; qi < q_values.size(); ++qi) {
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      for (const MethodRun& run : runs[qi * cfg.replications + rep]) {
        SweepRow row;
        row.q = q_values[qi];
        row.method = run.method;
        row.sqrt_pehe = run.out_sample.sqrt_pehe.value_or(0.0);
        row.eps_ate = run.out_sample.eps_ate.value_or(0.0);
        row.replication = rep;
        result.rows.push_back(row);
      }
    }
  }

  std::ofstream series((std::filesystem::path(cfg.out_dir) / "bias_sweep.csv").string());
  series << "q,method,sqrt_pehe,eps_ate,replication\n";
  for (const SweepRow& row : result.rows)
    series << detail::format_double(row.q) << ',' << row.method << ','
           << detail::format_double(row.sqrt_pehe) << ','
           << detail::format_double(row.eps_ate) << ',' << row.replication << "\n";
  json meta{{"format_version", kReportFormatVersion},
            {"config", experiment_config_to_json(cfg)},
            {"q_values", q_values}};
  save_json(meta, (std::filesystem::path(cfg.out_dir) / "bias_sweep_meta.json").string());
  return result;
}

struct GridCell {
  CorrelationFamily family = CorrelationFamily::Independent;
  std::size_t n_instrumental = 0;
  std::size_t n_irrelevant = 0;
  std::size_t replication = 0;
  std::vector<std::pair<std::string, MetricsReport>> by_method;  // out-of-sample
};

struct GridResult {
  std::vector<GridCell> cells;  // one per (family, counts, replication)
};

// Full-factorial robustness grid over correlation family and the counts of
// instrumental and irrelevant variables.
inline GridResult run_grid(const ExperimentConfig& cfg,
                           const std::vector<CorrelationFamily>& families,
                           const std::vector<std::size_t>& instrumental_counts,
                           const std::vector<std::size_t>& irrelevant_counts) {
  cfg.validate();
  if (families.empty() || instrumental_counts.empty() || irrelevant_counts.empty())
    throw std::invalid_argument("grid: empty axis");
  if (!cfg.synthetic_source)
    throw std::invalid_argument("grid: needs a synthetic source");
  std::filesystem::create_directories(cfg.out_dir);

  struct CellSpec {
    CorrelationFamily family;
    std::size_t n_inst, n_irr, rep;
  };
  std::vector<CellSpec> specs;
  for (CorrelationFamily family : families)
    for (std::size_t n_inst : instrumental_counts)
      for (std::size_t n_irr : irrelevant_counts)
        for (std::size_t rep = 0; rep < cfg.replications; ++rep)
          specs.push_back({family, n_inst, n_irr, rep});

  GridResult result;
  result.cells.resize(specs.size());
  parallel_for(specs.size(), [&](std::size_t task) {
    const CellSpec& cell = specs[task];
    SyntheticSpec spec = cfg.synthetic;
    spec.correlation_family = cell.family;
    spec.n_instrumental = cell.n_inst;
    spec.n_irrelevant = cell.n_irr;
    PreparedData data = prepare_data(cfg, spec, cell.rep);
    GridCell& slot = result.cells[task];
    slot.family = cell.family;
    slot.n_instrumental = cell.n_inst;
    slot.n_irrelevant = cell.n_irr;
    slot.replication = cell.rep;
    for (Method m : cfg.methods) {
      MethodRun run = run_method(cfg, m, data);
      slot.by_method.emplace_back(run.method, run.out_sample);
    }
  });

  std::ofstream grid_csv((std::filesystem::path(cfg.out_dir) / "grid.csv").string());
  grid_csv << "family,n_instrumental,n_irrelevant,replication";
  for (Method m : cfg.methods)
    grid_csv << ",sqrt_pehe_" << method_label(m) << ",eps_ate_" << method_label(m);
  grid_csv << "\n";
  for (const GridCell& cell : result.cells) {
    grid_csv << correlation_family_label(cell.family) << ',' << cell.n_instrumental
             << ',' << cell.n_irrelevant << ',' << cell.replication;
    for (const auto& [label, report] : cell.by_method)
      grid_csv << ',' << detail::format_double(report.sqrt_pehe.value_or(0.0))
               << ',' << detail::format_double(report.eps_ate.value_or(0.0));
    grid_csv << "\n";
  }
  json meta{{"format_version", kReportFormatVersion},
            {"config", experiment_config_to_json(cfg)}};
  save_json(meta, (std::filesystem::path(cfg.out_dir) / "grid_meta.json").string());
  return result;
}

}  // namespace idrl
