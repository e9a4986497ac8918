#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idrl/dataset.hpp"
#include "idrl/errors.hpp"
#include "idrl/metrics.hpp"
#include "idrl/model.hpp"
#include "idrl/synthetic.hpp"

namespace idrl {

using nlohmann::json;

inline constexpr const char* kModelFormatVersion = "idrl-model/1";
inline constexpr const char* kReportFormatVersion = "idrl-report/1";

inline std::string activation_label(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

inline Activation activation_from_label(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw SchemaError("unknown activation: " + s);
}

inline json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const json& j) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols)
    throw SchemaError("matrix data length does not match rows*cols");
  return m;
}

inline json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (const DenseLayer& l : net)
    layers.push_back(json{{"weight", matrix_to_json(l.weight)},
                          {"bias", l.bias},
                          {"activation", activation_label(l.activation)}});
  return layers;
}

inline Mlp mlp_from_json(const json& j) {
  Mlp net;
  for (const json& l : j) {
    DenseLayer layer;
    layer.weight = matrix_from_json(l.at("weight"));
    layer.bias = l.at("bias").get<std::vector<double>>();
    layer.activation = activation_from_label(l.at("activation").get<std::string>());
    net.push_back(std::move(layer));
  }
  return net;
}

inline json config_to_json(const IdrlConfig& c) {
  return json{{"rep_layers", c.rep_layers},
              {"rep_dim", c.rep_dim},
              {"head_layers", c.head_layers},
              {"phi_layers", c.phi_layers},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"scorer_lr_scale", c.scorer_lr_scale},
              {"seed", c.seed},
              {"disable_infomax", c.disable_infomax},
              {"disable_domain_mi", c.disable_domain_mi},
              {"freeze_domain_net", c.freeze_domain_net}};
}

inline IdrlConfig config_from_json(const json& j) {
  IdrlConfig c;
  if (j.contains("rep_layers")) c.rep_layers = j.at("rep_layers").get<std::vector<std::size_t>>();
  if (j.contains("rep_dim")) c.rep_dim = j.at("rep_dim").get<std::size_t>();
  if (j.contains("head_layers")) c.head_layers = j.at("head_layers").get<std::vector<std::size_t>>();
  if (j.contains("phi_layers")) c.phi_layers = j.at("phi_layers").get<std::vector<std::size_t>>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("beta")) c.beta = j.at("beta").get<double>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("scorer_lr_scale")) c.scorer_lr_scale = j.at("scorer_lr_scale").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("disable_infomax")) c.disable_infomax = j.at("disable_infomax").get<bool>();
  if (j.contains("disable_domain_mi")) c.disable_domain_mi = j.at("disable_domain_mi").get<bool>();
  if (j.contains("freeze_domain_net")) c.freeze_domain_net = j.at("freeze_domain_net").get<bool>();
  return c;
}

inline json model_to_json(const IdrlParams& p) {
  return json{{"format_version", kModelFormatVersion},
              {"config", config_to_json(p.config)},
              {"rep_net", mlp_to_json(p.rep_net)},
              {"head_control", mlp_to_json(p.head_control)},
              {"head_treated", mlp_to_json(p.head_treated)},
              {"domain_net", mlp_to_json(p.domain_net)},
              {"w_infomax", matrix_to_json(p.w_infomax)},
              {"w_domain", matrix_to_json(p.w_domain)},
              {"x_scaler", json{{"mean", p.x_scaler.mean}, {"scale", p.x_scaler.scale}}},
              {"y_mean", p.y_mean},
              {"y_sd", p.y_sd}};
}

inline IdrlParams model_from_json(const json& j) {
  if (j.at("format_version").get<std::string>() != kModelFormatVersion)
    throw SchemaError("unsupported model format version");
  IdrlParams p;
  p.config = config_from_json(j.at("config"));
  p.rep_net = mlp_from_json(j.at("rep_net"));
  p.head_control = mlp_from_json(j.at("head_control"));
  p.head_treated = mlp_from_json(j.at("head_treated"));
  p.domain_net = mlp_from_json(j.at("domain_net"));
  p.w_infomax = matrix_from_json(j.at("w_infomax"));
  p.w_domain = matrix_from_json(j.at("w_domain"));
  p.x_scaler.mean = j.at("x_scaler").at("mean").get<std::vector<double>>();
  p.x_scaler.scale = j.at("x_scaler").at("scale").get<std::vector<double>>();
  p.y_mean = j.at("y_mean").get<double>();
  p.y_sd = j.at("y_sd").get<double>();
  return p;
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file: " + path);
  return json::parse(in);
}

inline void save_model(const IdrlParams& p, const std::string& path) {
  save_json(model_to_json(p), path);
}

inline IdrlParams load_model(const std::string& path) {
  return model_from_json(load_json(path));
}

inline json synthetic_spec_to_json(const SyntheticSpec& s) {
  return json{{"n_samples", s.n_samples},
              {"n_confounders", s.n_confounders},
              {"n_adjustment", s.n_adjustment},
              {"n_instrumental", s.n_instrumental},
              {"n_irrelevant", s.n_irrelevant},
              {"correlation_family", correlation_family_label(s.correlation_family)},
              {"correlation_scope", correlation_scope_label(s.correlation_scope)},
              {"coefficient_seed", s.coefficient_seed},
              {"noise_sd", s.noise_sd},
              {"q", s.q}};
}

inline SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec s;
  if (j.contains("n_samples")) s.n_samples = j.at("n_samples").get<std::size_t>();
  if (j.contains("n_confounders")) s.n_confounders = j.at("n_confounders").get<std::size_t>();
  if (j.contains("n_adjustment")) s.n_adjustment = j.at("n_adjustment").get<std::size_t>();
  if (j.contains("n_instrumental")) s.n_instrumental = j.at("n_instrumental").get<std::size_t>();
  if (j.contains("n_irrelevant")) s.n_irrelevant = j.at("n_irrelevant").get<std::size_t>();
  if (j.contains("correlation_family"))
    s.correlation_family =
        correlation_family_from_label(j.at("correlation_family").get<std::string>());
  if (j.contains("correlation_scope"))
    s.correlation_scope =
        correlation_scope_from_label(j.at("correlation_scope").get<std::string>());
  if (j.contains("coefficient_seed")) s.coefficient_seed = j.at("coefficient_seed").get<std::uint64_t>();
  if (j.contains("noise_sd")) s.noise_sd = j.at("noise_sd").get<double>();
  if (j.contains("q")) s.q = j.at("q").get<double>();
  return s;
}

// Sidecar written next to generated datasets: the full spec, the seeds, and
// a digest of the frozen coefficient vectors.
inline json generation_metadata(const SyntheticSpec& spec, std::uint64_t sample_seed,
                                const SyntheticCoefficients& coef) {
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(coef.digest()));
  json roles = json::array();
  for (VarRole r : spec.column_roles()) roles.push_back(var_role_label(r));
  return json{{"spec", synthetic_spec_to_json(spec)},
              {"sample_seed", sample_seed},
              {"coefficient_digest", std::string(digest)},
              {"kappa", coef.kappa},
              {"coefficients",
               json{{"beta_tau", coef.beta_tau},
                    {"beta_sin", coef.beta_sin},
                    {"beta_g", coef.beta_g},
                    {"beta_sq", coef.beta_sq},
                    {"beta_prop", coef.beta_prop}}},
              {"column_roles", roles}};
}

inline json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline json report_to_json(const MetricsReport& r) {
  json j{{"format_version", kReportFormatVersion},
         {"split", r.split_label},
         {"factual_rmse", r.factual_rmse},
         {"policy_cell_empty", r.policy_cell_empty}};
  j["sqrt_pehe"] = optional_to_json(r.sqrt_pehe);
  j["eps_ate"] = optional_to_json(r.eps_ate);
  j["r_pol"] = optional_to_json(r.r_pol);
  j["eps_att"] = optional_to_json(r.eps_att);
  return j;
}

inline MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  r.split_label = j.at("split").get<std::string>();
  r.sqrt_pehe = optional_from_json(j.at("sqrt_pehe"));
  r.eps_ate = optional_from_json(j.at("eps_ate"));
  r.factual_rmse = j.at("factual_rmse").get<double>();
  r.policy_cell_empty = j.value("policy_cell_empty", false);
  r.r_pol = optional_from_json(j.at("r_pol"));
  r.eps_att = optional_from_json(j.at("eps_att"));
  return r;
}

inline json split_spec_to_json(const SplitSpec& s) {
  return json{{"train", s.train_fraction},
              {"valid", s.valid_fraction},
              {"test", s.test_fraction},
              {"seed", s.seed}};
}

inline SplitSpec split_spec_from_json(const json& j) {
  SplitSpec s;
  if (j.contains("train")) s.train_fraction = j.at("train").get<double>();
  if (j.contains("valid")) s.valid_fraction = j.at("valid").get<double>();
  if (j.contains("test")) s.test_fraction = j.at("test").get<double>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace idrl
