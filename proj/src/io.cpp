#include "harvest/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace harvest {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  return m;
}

void expect_format(const json& j, const char* format, int version) {
  if (!j.contains("format") || j["format"] != format)
    throw std::runtime_error(std::string("document is not a ") + format);
  if (!j.contains("version") || j["version"].get<int>() != version)
    throw std::runtime_error(std::string(format) + ": unsupported version");
}

// JSON has no infinity literal; thresholds store it as the string "inf"
json threshold_to_json(double g) {
  if (std::isinf(g)) return "inf";
  return g;
}

double threshold_from_json(const json& v) {
  if (v.is_string()) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    throw std::runtime_error("bad threshold value");
  }
  return v.get<double>();
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string model_to_json(const ModelDocument& doc) {
  doc.params.validate();
  json j;
  j["format"] = "harvest-solar-model";
  j["version"] = 1;
  j["sample_period_s"] = doc.sample_period_s;
  j["means"] = vec_to_json(doc.params.mean);
  j["variances"] = vec_to_json(doc.params.variance);
  j["transition"] = mat_to_json(doc.params.trans);
  j["initial"] = vec_to_json(doc.params.initial);
  j["stationary"] = vec_to_json(doc.params.stationary());
  j["training"] = {{"iterations", doc.training.iterations},
                   {"converged", doc.training.converged},
                   {"log_likelihood",
                    doc.training.ll_trace.empty() ? 0.0 : doc.training.ll_trace.back()},
                   {"variance_floor", doc.training.variance_floor},
                   {"floored_states", doc.training.floored_states},
                   {"starved_states", doc.training.starved_states}};
  return j.dump(2) + "\n";
}

ModelDocument model_from_json(const std::string& text) {
  json j = json::parse(text);
  expect_format(j, "harvest-solar-model", 1);
  ModelDocument doc;
  doc.sample_period_s = j["sample_period_s"].get<double>();
  doc.params.mean = vec_from_json(j["means"]);
  doc.params.variance = vec_from_json(j["variances"]);
  doc.params.trans = mat_from_json(j["transition"]);
  doc.params.initial = vec_from_json(j["initial"]);
  const json& tr = j["training"];
  doc.training.iterations = tr["iterations"].get<int>();
  doc.training.converged = tr["converged"].get<bool>();
  doc.training.ll_trace = {tr["log_likelihood"].get<double>()};
  doc.training.variance_floor = tr["variance_floor"].get<double>();
  doc.training.floored_states = tr["floored_states"].get<int>();
  doc.training.starved_states = tr["starved_states"].get<int>();
  doc.params.validate();
  return doc;
}

void save_model(const ModelDocument& doc, const std::string& path) {
  write_text_file(path, model_to_json(doc));
}

ModelDocument load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

void ExperimentConfig::apply_snr() {
  radio.snr_unit = snr_unit_from_gamma_c(gamma_c_db, energy.p_unit_uw);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["format"] = "harvest-config";
  j["version"] = 1;
  j["energy"] = {{"p_unit_uw", cfg.energy.p_unit_uw},
                 {"period_s", cfg.energy.period_s},
                 {"panel_area_cm2", cfg.energy.panel_area_cm2},
                 {"efficiency", cfg.energy.efficiency},
                 {"q_max", cfg.energy.q_max}};
  json th = json::array();
  for (double g : cfg.channel.thresholds) th.push_back(threshold_to_json(g));
  j["channel"] = {{"thresholds", th},
                  {"gamma0", cfg.channel.gamma0},
                  {"fd_norm", cfg.channel.fd_norm}};
  json mods = json::array();
  for (const auto& m : cfg.radio.mods) mods.push_back(m.name);
  j["radio"] = {{"symbol_rate", cfg.radio.symbol_rate},
                {"packet_symbols", cfg.radio.packet_symbols},
                {"modulations", mods}};
  j["snr"] = {{"gamma_c_db", cfg.gamma_c_db}, {"snr_reference_uw", kSnrReferenceUw}};
  j["battery_levels"] = cfg.n_battery;
  j["solver"] = {{"discount", cfg.solver.discount},
                 {"epsilon", cfg.solver.epsilon},
                 {"max_sweeps", cfg.solver.max_sweeps}};
  j["sim"] = {{"periods", cfg.sim_periods},
              {"episodes", cfg.sim_episodes},
              {"ttfr_horizon", cfg.ttfr_horizon},
              {"myopic_single_mod", cfg.myopic_single_mod},
              {"myopic_max_mod", cfg.myopic_max_mod}};
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  expect_format(j, "harvest-config", 1);
  ExperimentConfig cfg;
  const json& e = j.at("energy");
  cfg.energy.p_unit_uw = e.at("p_unit_uw").get<double>();
  cfg.energy.period_s = e.at("period_s").get<double>();
  cfg.energy.panel_area_cm2 = e.at("panel_area_cm2").get<double>();
  cfg.energy.efficiency = e.at("efficiency").get<double>();
  if (e.contains("q_max")) cfg.energy.q_max = e["q_max"].get<int>();

  const json& c = j.at("channel");
  cfg.channel.thresholds.clear();
  for (const auto& v : c.at("thresholds")) cfg.channel.thresholds.push_back(threshold_from_json(v));
  cfg.channel.gamma0 = c.at("gamma0").get<double>();
  cfg.channel.fd_norm = c.at("fd_norm").get<double>();

  const json& r = j.at("radio");
  cfg.radio.symbol_rate = r.at("symbol_rate").get<double>();
  cfg.radio.packet_symbols = r.at("packet_symbols").get<double>();
  cfg.radio.mods.clear();
  for (const auto& m : r.at("modulations"))
    cfg.radio.mods.push_back(modulation_by_name(m.get<std::string>()));

  cfg.gamma_c_db = j.at("snr").at("gamma_c_db").get<double>();
  cfg.n_battery = j.at("battery_levels").get<int>();

  const json& s = j.at("solver");
  cfg.solver.discount = s.at("discount").get<double>();
  cfg.solver.epsilon = s.at("epsilon").get<double>();
  if (s.contains("max_sweeps")) cfg.solver.max_sweeps = s["max_sweeps"].get<int>();

  if (j.contains("sim")) {
    const json& sm = j["sim"];
    if (sm.contains("periods")) cfg.sim_periods = sm["periods"].get<std::int64_t>();
    if (sm.contains("episodes")) cfg.sim_episodes = sm["episodes"].get<int>();
    if (sm.contains("ttfr_horizon")) cfg.ttfr_horizon = sm["ttfr_horizon"].get<int>();
    if (sm.contains("myopic_single_mod"))
      cfg.myopic_single_mod = sm["myopic_single_mod"].get<std::string>();
    if (sm.contains("myopic_max_mod"))
      cfg.myopic_max_mod = sm["myopic_max_mod"].get<std::string>();
  }
  cfg.apply_snr();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_text_file(path));
}

std::string policy_to_json(const PolicyDocument& doc) {
  json j;
  j["format"] = "harvest-policy";
  j["version"] = 1;
  j["class"] = doc.policy.cls == PolicyClass::on_off ? "on_off" : "composite";
  j["dims"] = {{"solar", doc.policy.dims.n_solar},
               {"channel", doc.policy.dims.n_channel},
               {"battery", doc.policy.dims.n_battery},
               {"power", doc.policy.dims.n_power},
               {"modulation", doc.policy.dims.n_mod}};
  j["actions"] = {{"w", doc.policy.w}, {"m", doc.policy.m}};
  j["value"] = vec_to_json(doc.value);
  j["solver"] = {{"discount", doc.discount},
                 {"residual", doc.residual},
                 {"sweeps", doc.sweeps}};
  j["snr"] = {{"gamma_c_db", doc.gamma_c_db}, {"snr_reference_uw", kSnrReferenceUw}};
  j["modulations"] = doc.modulations;
  if (doc.kappa.size() > 0) {
    json k = json::array();
    for (Eigen::Index z = 0; z < doc.kappa.rows(); ++z) {
      json row = json::array();
      for (Eigen::Index x = 0; x < doc.kappa.cols(); ++x) row.push_back(doc.kappa(z, x));
      k.push_back(std::move(row));
    }
    j["kappa"] = std::move(k);
  }
  return j.dump(2) + "\n";
}

PolicyDocument policy_from_json(const std::string& text) {
  json j = json::parse(text);
  expect_format(j, "harvest-policy", 1);
  PolicyDocument doc;
  doc.policy.cls = j.at("class") == "on_off" ? PolicyClass::on_off : PolicyClass::composite;
  const json& d = j.at("dims");
  doc.policy.dims.n_solar = d.at("solar").get<int>();
  doc.policy.dims.n_channel = d.at("channel").get<int>();
  doc.policy.dims.n_battery = d.at("battery").get<int>();
  doc.policy.dims.n_power = d.at("power").get<int>();
  doc.policy.dims.n_mod = d.at("modulation").get<int>();
  doc.policy.w = j.at("actions").at("w").get<std::vector<int>>();
  doc.policy.m = j.at("actions").at("m").get<std::vector<int>>();
  if (static_cast<int>(doc.policy.w.size()) != doc.policy.dims.n_states() ||
      static_cast<int>(doc.policy.m.size()) != doc.policy.dims.n_states())
    throw std::runtime_error("policy document: action table size mismatch");
  doc.value = vec_from_json(j.at("value"));
  doc.discount = j.at("solver").at("discount").get<double>();
  doc.residual = j.at("solver").at("residual").get<double>();
  doc.sweeps = j.at("solver").at("sweeps").get<int>();
  doc.gamma_c_db = j.at("snr").at("gamma_c_db").get<double>();
  doc.modulations = j.at("modulations").get<std::vector<std::string>>();
  if (j.contains("kappa")) {
    const json& k = j["kappa"];
    doc.kappa.resize(k.size(), k.empty() ? 0 : k[0].size());
    for (std::size_t z = 0; z < k.size(); ++z)
      for (std::size_t x = 0; x < k[z].size(); ++x)
        doc.kappa(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(x)) =
            k[z][x].get<int>();
  }
  return doc;
}

void save_policy(const PolicyDocument& doc, const std::string& path) {
  write_text_file(path, policy_to_json(doc));
}

PolicyDocument load_policy(const std::string& path) {
  return policy_from_json(read_text_file(path));
}

std::string policy_to_csv(const PolicyDocument& doc) {
  std::ostringstream out;
  out << "solar,channel,battery,power,modulation,value\n";
  const MdpDims& d = doc.policy.dims;
  char buf[64];
  for (int z = 0; z < d.n_solar; ++z)
    for (int x = 0; x < d.n_channel; ++x)
      for (int n = 0; n < d.n_battery; ++n) {
        int s = (z * d.n_channel + x) * d.n_battery + n;
        std::snprintf(buf, sizeof buf, "%.17g", doc.value(s));
        out << z << ',' << x << ',' << n << ',' << doc.policy.w[s] << ','
            << doc.policy.m[s] << ',' << buf << '\n';
      }
  return out.str();
}

std::string pmf_to_csv(const EnergyQuantaPmf& pmf) {
  std::ostringstream out;
  out << "solar,quanta,probability\n";
  char buf[64];
  for (int j = 0; j < pmf.n_states(); ++j)
    for (int q = 0; q <= pmf.q_max; ++q) {
      std::snprintf(buf, sizeof buf, "%.17g", pmf.p(j, q));
      out << j << ',' << q << ',' << buf << '\n';
    }
  return out.str();
}

}  // namespace harvest
