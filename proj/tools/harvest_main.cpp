// harvest: command-line front end for the energy-harvesting transmission
// toolkit. Subcommands cover the whole pipeline — synthesize or resample
// irradiance data, train the solar model, solve for transmission policies,
// analyze their structure, and evaluate them in simulation. Outputs carry a
// tool-version and configuration echo and contain no wall-clock metadata, so
// reruns with identical inputs and seed are byte-identical.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "harvest/analysis.hpp"
#include "harvest/belief.hpp"
#include "harvest/channel.hpp"
#include "harvest/energy.hpp"
#include "harvest/hmm.hpp"
#include "harvest/ingest.hpp"
#include "harvest/io.hpp"
#include "harvest/mdp.hpp"
#include "harvest/rng.hpp"
#include "harvest/sim.hpp"

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kToolVersion = "1.0.0";

ojson tool_echo() {
  return ojson{{"name", "harvest"}, {"version", kToolVersion}};
}

double parse_double(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size())
    throw std::invalid_argument(std::string(what) + ": bad number '" + s + "'");
  return v;
}

struct Window {
  int start_h = 7;
  int end_h = 17;
};

// "HH:MM-HH:MM" (whole hours only) or plain "H-H"
Window parse_window(const std::string& text) {
  auto hour = [&](const std::string& s) {
    std::size_t colon = s.find(':');
    if (colon != std::string::npos && s.substr(colon + 1) != "00")
      throw std::invalid_argument("window: only whole hours are supported in '" +
                                  text + "'");
    std::string hh = s.substr(0, colon);
    std::size_t pos = 0;
    int h = 0;
    try {
      h = std::stoi(hh, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != hh.size() || h < 0 || h > 24)
      throw std::invalid_argument("window: bad hour in '" + text + "'");
    return h;
  };
  std::size_t dash = text.find('-');
  if (dash == std::string::npos)
    throw std::invalid_argument("window: expected HH:MM-HH:MM, got '" + text + "'");
  Window w;
  w.start_h = hour(text.substr(0, dash));
  w.end_h = hour(text.substr(dash + 1));
  if (w.end_h <= w.start_h)
    throw std::invalid_argument("window: end must be after start in '" + text + "'");
  return w;
}

// "snr=START:STOP:STEP" (inclusive grid) or "snr=VALUE"
std::vector<double> parse_sweep(const std::string& text) {
  if (text.rfind("snr=", 0) != 0)
    throw std::invalid_argument("sweep: expected snr=START:STOP:STEP, got '" +
                                text + "'");
  std::vector<std::string> parts;
  std::string body = text.substr(4);
  std::size_t begin = 0;
  while (true) {
    std::size_t colon = body.find(':', begin);
    parts.push_back(body.substr(begin, colon == std::string::npos
                                           ? std::string::npos
                                           : colon - begin));
    if (colon == std::string::npos) break;
    begin = colon + 1;
  }
  if (parts.size() == 1) return {parse_double(parts[0], "sweep")};
  if (parts.size() != 3)
    throw std::invalid_argument("sweep: expected snr=START:STOP:STEP, got '" +
                                text + "'");
  double a = parse_double(parts[0], "sweep start");
  double b = parse_double(parts[1], "sweep stop");
  double step = parse_double(parts[2], "sweep step");
  if (step <= 0.0 || b < a)
    throw std::invalid_argument("sweep: need STOP >= START and STEP > 0");
  int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) grid.push_back(a + step * k);
  return grid;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t comma = text.find(',', begin);
    std::string item = text.substr(
        begin, comma == std::string::npos ? std::string::npos : comma - begin);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return out;
}

std::string csv_cell(const ojson& v) {
  std::string raw = v.is_string() ? v.get<std::string>() : v.dump();
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

void flatten_json(const ojson& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(),
                   out);
  } else {
    out << prefix << ',' << csv_cell(j) << '\n';
  }
}

// json: the whole report; csv: the "rows" table when present, else key,value
std::string render_report(const ojson& report, const std::string& format) {
  if (format == "json") return report.dump(2) + "\n";
  std::ostringstream out;
  if (report.contains("rows") && report["rows"].is_array() &&
      !report["rows"].empty() && report["rows"][0].is_object()) {
    const ojson& rows = report["rows"];
    bool first = true;
    for (auto it = rows[0].begin(); it != rows[0].end(); ++it) {
      if (!first) out << ',';
      out << it.key();
      first = false;
    }
    out << '\n';
    for (const auto& row : rows) {
      first = true;
      for (auto it = row.begin(); it != row.end(); ++it) {
        if (!first) out << ',';
        out << csv_cell(it.value());
        first = false;
      }
      out << '\n';
    }
  } else {
    out << "key,value\n";
    flatten_json(report, "", out);
  }
  return out.str();
}

ojson vec_json(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson kappa_json(const Eigen::MatrixXi& k) {
  ojson rows = ojson::array();
  for (Eigen::Index z = 0; z < k.rows(); ++z) {
    ojson r = ojson::array();
    for (Eigen::Index x = 0; x < k.cols(); ++x) r.push_back(k(z, x));
    rows.push_back(std::move(r));
  }
  return rows;
}

harvest::ExperimentConfig load_config_or_default(const std::string& path) {
  if (!path.empty()) {
    try {
      return harvest::load_config(path);
    } catch (const std::exception& e) {
      throw std::runtime_error("config " + path + ": " + e.what());
    }
  }
  harvest::ExperimentConfig cfg;
  cfg.radio.mods = {harvest::modulation_qpsk(), harvest::modulation_8psk(),
                    harvest::modulation_16qam()};
  cfg.apply_snr();
  return cfg;
}

harvest::ModelDocument load_model_checked(const std::string& path) {
  try {
    return harvest::load_model(path);
  } catch (const std::exception& e) {
    throw std::runtime_error("model " + path + ": " + e.what());
  }
}

int mod_index_by_name(const std::vector<harvest::Modulation>& mods,
                      std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::size_t i = 0; i < mods.size(); ++i)
    if (mods[i].name == name) return static_cast<int>(i);
  std::string have;
  for (const auto& m : mods) {
    if (!have.empty()) have += ",";
    have += m.name;
  }
  throw std::invalid_argument("modulation '" + name +
                              "' is not in the configured set {" + have + "}");
}

harvest::LoadOptions load_options(const std::string& layout, bool clamp) {
  harvest::LoadOptions opts;
  if (layout == "headered") opts.layout = harvest::CsvLayout::headered;
  else if (layout == "legacy") opts.layout = harvest::CsvLayout::legacy;
  else throw std::invalid_argument("layout must be 'headered' or 'legacy'");
  opts.clamp_negative = clamp;
  return opts;
}

struct ResampledData {
  harvest::LoadReport input;
  harvest::ResampleResult result;
  std::int64_t native_period_s = 0;
};

ResampledData load_and_resample(const std::string& path,
                                const harvest::LoadOptions& opts,
                                const Window& w, int period_s,
                                std::int64_t utc_offset_s) {
  harvest::LoadResult lr = harvest::load_irradiance(path, opts);
  harvest::WindowConfig wc;
  wc.active_start_h = w.start_h;
  wc.active_end_h = w.end_h;
  wc.period_s = period_s;
  wc.utc_offset_s = utc_offset_s;
  wc.validate(lr.series.native_period_s);
  ResampledData out;
  out.input = lr.report;
  out.native_period_s = lr.series.native_period_s;
  out.result = harvest::resample(lr.series, wc);
  return out;
}

ojson resample_echo(const ResampledData& d) {
  std::size_t periods = 0;
  for (const auto& s : d.result.sequences) periods += s.values.size();
  return ojson{{"input",
                {{"rows_read", d.input.rows_read},
                 {"rows_rejected", d.input.rows_rejected},
                 {"negatives_clamped", d.input.negatives_clamped},
                 {"gaps", d.input.gaps},
                 {"native_period_s", d.native_period_s}}},
               {"resampled",
                {{"sequences", d.result.sequences.size()},
                 {"periods", periods},
                 {"periods_missing", d.result.periods_missing},
                 {"samples_used", d.result.samples_used},
                 {"samples_outside_window", d.result.samples_outside_window}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-harvesting transmission policy toolkit"};
  app.set_version_flag("--version", std::string("harvest ") + kToolVersion);
  app.require_subcommand(1);

  // global options (subcommands fall through to these)
  std::string config_path, out_path, format = "json";
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "experiment configuration document");
  app.add_option("--out", out_path, "primary output artifact path");
  app.add_option("--seed", seed, "master random seed")->capture_default_str();
  app.add_option("--format", format, "stdout report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // shared data-handling options; registered per subcommand, same storage
  std::string window_text = "07:00-17:00";
  int period_s = 300;
  std::int64_t utc_offset_s = 0;
  std::string layout = "headered";
  bool clamp_negative = false;
  auto add_window_opts = [&](CLI::App* cmd, bool with_layout) {
    cmd->add_option("--window", window_text, "daily active window (HH:MM-HH:MM)")
        ->capture_default_str();
    cmd->add_option("--period", period_s, "management period, seconds")
        ->capture_default_str();
    cmd->add_option("--utc-offset", utc_offset_s, "local-time offset, seconds")
        ->capture_default_str();
    if (with_layout) {
      cmd->add_option("--layout", layout, "csv layout: headered or legacy")
          ->check(CLI::IsMember({"headered", "legacy"}))
          ->capture_default_str();
      cmd->add_flag("--clamp-negative", clamp_negative,
                    "clamp negative readings to zero instead of rejecting them");
    }
  };

  // ---- data ----------------------------------------------------------------
  auto* data = app.add_subcommand("data", "irradiance data utilities");
  data->require_subcommand(1);
  data->fallthrough();

  auto* gen = data->add_subcommand(
      "generate", "sample synthetic irradiance from a solar model");
  gen->fallthrough();
  std::string gen_model, gen_start = "2024-06-01T00:00:00Z";
  int gen_days = 5;
  gen->add_option("--model", gen_model, "solar model document")->required();
  gen->add_option("--days", gen_days, "number of days to synthesize")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--start", gen_start, "first day, ISO-8601")
      ->capture_default_str();
  add_window_opts(gen, false);

  auto* rsmp = data->add_subcommand(
      "resample", "bucket raw readings into daylight period means");
  rsmp->fallthrough();
  std::string rsmp_data;
  rsmp->add_option("--data", rsmp_data, "irradiance csv")->required();
  add_window_opts(rsmp, true);

  // ---- train ---------------------------------------------------------------
  auto* train = app.add_subcommand(
      "train", "fit the hidden-state solar model to irradiance data");
  train->fallthrough();
  std::string train_data;
  int train_states = 4, train_max_iters = 500;
  double train_tol = 1e-6;
  train->add_option("--data", train_data, "irradiance csv")->required();
  train->add_option("--states", train_states, "number of hidden states")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--max-iters", train_max_iters, "iteration cap")
      ->capture_default_str();
  train->add_option("--tol", train_tol, "relative log-likelihood tolerance")
      ->capture_default_str();
  add_window_opts(train, true);

  // ---- solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand(
      "solve", "build the decision model and solve for an optimal policy");
  solve->fallthrough();
  std::string solve_model, policy_class = "onoff", modulation, export_csv;
  double opt_discount = -1.0, opt_epsilon = -1.0, opt_snr_db =
      std::numeric_limits<double>::quiet_NaN();
  int opt_battery = -1;
  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--battery", opt_battery, "battery levels override");
    cmd->add_option("--discount", opt_discount, "discount factor override");
    cmd->add_option("--epsilon", opt_epsilon, "solver tolerance override");
    cmd->add_option("--snr-db", opt_snr_db, "channel SNR parameter override, dB");
  };
  solve->add_option("--model", solve_model, "solar model document")->required();
  solve->add_option("--policy-class", policy_class, "onoff or composite")
      ->check(CLI::IsMember({"onoff", "composite"}))
      ->capture_default_str();
  solve->add_option("--modulation", modulation,
                    "modulation for on-off policies (default: first configured)");
  solve->add_option("--export-csv", export_csv, "also write the policy table as csv");
  add_model_opts(solve);

  // ---- analyze ---------------------------------------------------------------
  auto* analyze = app.add_subcommand(
      "analyze", "structural analysis of a solved on-off policy");
  analyze->fallthrough();
  std::string analyze_model, analyze_policy;
  analyze->add_option("--model", analyze_model, "solar model document")->required();
  analyze->add_option("--policy", analyze_policy, "policy document")->required();

  // ---- simulate --------------------------------------------------------------
  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo policy evaluation over an SNR grid");
  simulate->fallthrough();
  std::string sim_model, sweep_text, policies_text = "onoff", sim_data;
  std::string belief_text = "mixed", channel_text = "jakes";
  std::int64_t sim_periods = 0;
  int sim_episodes = 0, sim_horizon = 0, sim_initial_battery = -1;
  bool sim_bernoulli = false;
  simulate->add_option("--model", sim_model, "solar model document")->required();
  simulate->add_option("--sweep", sweep_text,
                       "SNR grid 'snr=START:STOP:STEP' (inclusive)");
  simulate->add_option("--policies", policies_text,
                       "comma list: onoff,composite,myopic1,myopic2,ttfr")
      ->capture_default_str();
  simulate->add_option("--data", sim_data,
                       "recorded irradiance csv (default: synthetic)");
  simulate->add_option("--periods", sim_periods, "periods per episode");
  simulate->add_option("--episodes", sim_episodes, "independent episodes");
  simulate->add_option("--belief", belief_text,
                       "state estimator for solved policies")
      ->check(CLI::IsMember({"mixed", "max", "oracle"}))
      ->capture_default_str();
  simulate->add_option("--channel", channel_text, "fading source")
      ->check(CLI::IsMember({"jakes", "fsmc"}))
      ->capture_default_str();
  simulate->add_option("--horizon", sim_horizon, "oracle block length override");
  simulate->add_option("--initial-battery", sim_initial_battery,
                       "starting level (-1: uniform random)")
      ->capture_default_str();
  simulate->add_flag("--bernoulli", sim_bernoulli,
                     "draw per-packet outcomes instead of expected bits");
  simulate->add_option("--modulation", modulation,
                       "modulation for onoff/ttfr (default: first configured)");
  add_model_opts(simulate);
  add_window_opts(simulate, true);

  CLI11_PARSE(app, argc, argv);

  std::string active = "harvest";
  try {
    using namespace harvest;

    auto apply_overrides = [&](ExperimentConfig& cfg) {
      if (opt_battery > 0) cfg.n_battery = opt_battery;
      if (opt_discount >= 0.0) cfg.solver.discount = opt_discount;
      if (opt_epsilon >= 0.0) cfg.solver.epsilon = opt_epsilon;
      if (!std::isnan(opt_snr_db)) cfg.gamma_c_db = opt_snr_db;
      cfg.apply_snr();
    };
    auto emit = [&](ojson& report, bool out_is_report) {
      std::string rendered = render_report(report, format);
      if (out_is_report && !out_path.empty()) write_text_file(out_path, rendered);
      std::cout << rendered;
    };

    if (gen->parsed()) {
      active = "data generate";
      if (out_path.empty())
        throw std::invalid_argument("data generate requires --out");
      ModelDocument mdoc = load_model_checked(gen_model);
      Window w = parse_window(window_text);
      if (!gen->count("--period") && mdoc.sample_period_s > 0)
        period_s = static_cast<int>(mdoc.sample_period_s);
      const int window_s = (w.end_h - w.start_h) * 3600;
      if (period_s <= 0 || window_s % period_s != 0)
        throw std::invalid_argument("period must divide the active window");
      const int ppd = window_s / period_s;
      std::int64_t start_ts = parse_timestamp(gen_start);

      Rng rng(seed);
      HmmSample sample =
          sample_hmm(mdoc.params, static_cast<std::size_t>(gen_days) * ppd, rng);
      IrradianceSeries series;
      series.native_period_s = period_s;
      std::size_t clamped = 0;
      for (int d = 0; d < gen_days; ++d)
        for (int k = 0; k < ppd; ++k) {
          double v = sample.obs[static_cast<std::size_t>(d) * ppd + k];
          if (v < 0.0) {  // a physical sensor reports nonnegative irradiance
            v = 0.0;
            ++clamped;
          }
          std::int64_t t = start_ts + 86400LL * d + 3600LL * w.start_h -
                           utc_offset_s + static_cast<std::int64_t>(period_s) * k;
          series.samples.push_back({t, v});
        }
      save_irradiance(series, out_path);

      ojson report{{"tool", tool_echo()},
                   {"command", active},
                   {"options",
                    {{"model", gen_model},
                     {"days", gen_days},
                     {"start", gen_start},
                     {"window", window_text},
                     {"period_s", period_s},
                     {"utc_offset_s", utc_offset_s},
                     {"seed", seed}}},
                   {"samples", series.samples.size()},
                   {"negatives_clamped", clamped},
                   {"out", out_path}};
      emit(report, false);
    } else if (rsmp->parsed()) {
      active = "data resample";
      Window w = parse_window(window_text);
      ResampledData d = load_and_resample(
          rsmp_data, load_options(layout, clamp_negative), w, period_s,
          utc_offset_s);
      if (!out_path.empty()) {
        IrradianceSeries out_series;
        out_series.native_period_s = period_s;
        for (const auto& seq : d.result.sequences)
          for (std::size_t k = 0; k < seq.values.size(); ++k)
            out_series.samples.push_back(
                {seq.day_start +
                     static_cast<std::int64_t>(period_s) *
                         (seq.first_period + static_cast<std::int64_t>(k)),
                 seq.values[k]});
        save_irradiance(out_series, out_path);
      }
      ojson report{{"tool", tool_echo()},
                   {"command", active},
                   {"options",
                    {{"data", rsmp_data},
                     {"window", window_text},
                     {"period_s", period_s},
                     {"utc_offset_s", utc_offset_s},
                     {"layout", layout},
                     {"clamp_negative", clamp_negative}}}};
      report.update(resample_echo(d));
      if (!out_path.empty()) report["out"] = out_path;
      emit(report, false);
    } else if (train->parsed()) {
      active = "train";
      Window w = parse_window(window_text);
      ResampledData d = load_and_resample(
          train_data, load_options(layout, clamp_negative), w, period_s,
          utc_offset_s);
      auto seqs = d.result.observation_sequences();
      if (seqs.empty())
        throw std::runtime_error("no usable observation sequences after resampling");
      EmOptions eo;
      eo.max_iters = train_max_iters;
      eo.ll_tol = train_tol;
      auto [params, trep] = em_train(seqs, train_states, eo);

      ModelDocument doc;
      doc.params = params;
      doc.sample_period_s = period_s;
      doc.training = trep;
      if (!out_path.empty()) save_model(doc, out_path);

      ojson report{{"tool", tool_echo()},
                   {"command", active},
                   {"options",
                    {{"data", train_data},
                     {"states", train_states},
                     {"window", window_text},
                     {"period_s", period_s},
                     {"utc_offset_s", utc_offset_s},
                     {"layout", layout},
                     {"clamp_negative", clamp_negative},
                     {"max_iters", train_max_iters},
                     {"tol", train_tol}}}};
      report.update(resample_echo(d));
      report["training"] = {
          {"iterations", trep.iterations},
          {"converged", trep.converged},
          {"log_likelihood", trep.ll_trace.empty() ? 0.0 : trep.ll_trace.back()},
          {"variance_floor", trep.variance_floor},
          {"floored_states", trep.floored_states},
          {"starved_states", trep.starved_states}};
      report["model"] = {{"means", vec_json(params.mean)},
                         {"variances", vec_json(params.variance)},
                         {"stationary", vec_json(params.stationary())}};
      if (!out_path.empty()) report["out"] = out_path;
      emit(report, false);
    } else if (solve->parsed()) {
      active = "solve";
      ExperimentConfig cfg = load_config_or_default(config_path);
      apply_overrides(cfg);
      ModelDocument mdoc = load_model_checked(solve_model);
      const bool onoff = policy_class == "onoff";
      const int mod_idx =
          onoff ? mod_index_by_name(
                      cfg.radio.mods,
                      modulation.empty() ? cfg.radio.mods.at(0).name : modulation)
                : 0;
      MdpModel md = build_mdp(mdoc.params, cfg.energy, cfg.channel, cfg.radio,
                              cfg.n_battery,
                              onoff ? PolicyClass::on_off : PolicyClass::composite,
                              mod_idx);
      Solution sol = value_iteration(md, cfg.solver);

      PolicyDocument pdoc;
      pdoc.policy = sol.policy;
      pdoc.value = sol.value;
      pdoc.discount = cfg.solver.discount;
      pdoc.residual = sol.residual;
      pdoc.sweeps = sol.sweeps;
      pdoc.gamma_c_db = cfg.gamma_c_db;
      if (onoff) {
        pdoc.modulations = {cfg.radio.mods[static_cast<std::size_t>(mod_idx)].name};
      } else {
        for (const auto& m : cfg.radio.mods) pdoc.modulations.push_back(m.name);
      }

      ojson report{{"tool", tool_echo()},
                   {"command", active},
                   {"config", ojson::parse(config_to_json(cfg))},
                   {"model", solve_model},
                   {"policy_class", policy_class},
                   {"modulations", pdoc.modulations},
                   {"solver",
                    {{"states", md.dims.n_states()},
                     {"sweeps", sol.sweeps},
                     {"residual", sol.residual},
                     {"clamped_ber_bounds", md.clamped_eta}}}};
      if (onoff) {
        ThresholdAnalysis th =
            check_threshold(md, sol.policy, sol.value, cfg.solver.discount);
        pdoc.kappa = th.kappa;
        report["thresholds"] = {{"all_threshold", th.all_threshold},
                                {"theta_consistent", th.theta_consistent},
                                {"kappa", kappa_json(th.kappa)}};
        ojson rows = ojson::array();
        for (int z = 0; z < md.dims.n_solar; ++z)
          for (int x = 0; x < md.dims.n_channel; ++x)
            rows.push_back({{"solar", z}, {"channel", x}, {"kappa", th.kappa(z, x)}});
        report["rows"] = std::move(rows);
      }
      if (!out_path.empty()) {
        save_policy(pdoc, out_path);
        report["out"] = out_path;
      }
      if (!export_csv.empty()) {
        write_text_file(export_csv, policy_to_csv(pdoc));
        report["export_csv"] = export_csv;
      }
      emit(report, false);
    } else if (analyze->parsed()) {
      active = "analyze";
      ExperimentConfig cfg = load_config_or_default(config_path);
      apply_overrides(cfg);
      ModelDocument mdoc = load_model_checked(analyze_model);
      PolicyDocument pdoc = load_policy(analyze_policy);
      if (pdoc.policy.cls != PolicyClass::on_off)
        throw std::invalid_argument(
            "analyze requires an on-off policy document");
      // the decision model must match the solved policy, so its SNR and
      // battery size are authoritative unless explicitly overridden
      if (std::isnan(opt_snr_db)) cfg.gamma_c_db = pdoc.gamma_c_db;
      if (opt_battery <= 0) cfg.n_battery = pdoc.policy.dims.n_battery;
      cfg.apply_snr();
      const int mod_idx =
          mod_index_by_name(cfg.radio.mods, pdoc.modulations.at(0));
      MdpModel md = build_mdp(mdoc.params, cfg.energy, cfg.channel, cfg.radio,
                              cfg.n_battery, PolicyClass::on_off, mod_idx);
      if (md.dims.n_solar != pdoc.policy.dims.n_solar ||
          md.dims.n_channel != pdoc.policy.dims.n_channel ||
          md.dims.n_battery != pdoc.policy.dims.n_battery)
        throw std::runtime_error(
            "policy/model dimension mismatch: the policy was solved for a "
            "different state space");

      ThresholdAnalysis th =
          check_threshold(md, pdoc.policy, pdoc.value, pdoc.discount);
      StationaryResult st = stationary_under_policy(md, th.kappa);
      double rate = expected_net_bit_rate(md, th.kappa, st.nu);
      double qbar = mean_quanta_rate(md, mdoc.params.stationary());
      double bound = rate_upper_bound(md, qbar);

      ojson report{{"tool", tool_echo()},
                   {"command", active},
                   {"config", ojson::parse(config_to_json(cfg))},
                   {"model", analyze_model},
                   {"policy", analyze_policy},
                   {"thresholds",
                    {{"all_threshold", th.all_threshold},
                     {"theta_consistent", th.theta_consistent},
                     {"kappa", kappa_json(th.kappa)}}},
                   {"rate",
                    {{"expected_bps", rate},
                     {"mean_quanta_per_period", qbar},
                     {"bound_bps", bound},
                     {"stationary_residual", st.residual}}}};

      Eigen::VectorXd battery_marginal =
          Eigen::VectorXd::Zero(md.dims.n_battery);
      for (int z = 0; z < md.dims.n_solar; ++z)
        for (int x = 0; x < md.dims.n_channel; ++x)
          for (int n = 0; n < md.dims.n_battery; ++n)
            battery_marginal(n) += st.nu(st.idx(md.dims, z, x, n));
      report["battery_marginal"] = vec_json(battery_marginal);

      // necessary deficiency regions exist only for single-quantum harvests
      bool deficiency_ok = true;
      std::string deficiency_note;
      ojson rows = ojson::array();
      for (int z = 0; z < md.dims.n_solar && deficiency_ok; ++z)
        for (int x = 0; x < md.dims.n_channel; ++x) {
          try {
            DeficiencyInterval di = deficiency_region(
                md, pdoc.value, pdoc.discount, z, x, th.kappa(z, x));
            rows.push_back({{"solar", z},
                            {"channel", x},
                            {"kappa", th.kappa(z, x)},
                            {"deficiency_p0", md.pmf.p(z, 0)},
                            {"lo", di.lo},
                            {"hi", di.hi},
                            {"feasible", di.feasible}});
          } catch (const std::invalid_argument& e) {
            deficiency_ok = false;
            deficiency_note = e.what();
            break;
          }
        }
      if (deficiency_ok) {
        report["rows"] = std::move(rows);
      } else {
        report["deficiency"] = "unsupported: " + deficiency_note;
        ojson krows = ojson::array();
        for (int z = 0; z < md.dims.n_solar; ++z)
          for (int x = 0; x < md.dims.n_channel; ++x)
            krows.push_back(
                {{"solar", z}, {"channel", x}, {"kappa", th.kappa(z, x)}});
        report["rows"] = std::move(krows);
      }
      emit(report, true);
    } else if (simulate->parsed()) {
      active = "simulate";
      ExperimentConfig cfg = load_config_or_default(config_path);
      apply_overrides(cfg);
      ModelDocument mdoc = load_model_checked(sim_model);

      std::vector<double> grid =
          sweep_text.empty()
              ? std::vector<double>{cfg.gamma_c_db}
              : parse_sweep(sweep_text);
      std::vector<std::string> names = split_list(policies_text);
      if (names.empty()) throw std::invalid_argument("no policies requested");
      auto has = [&](const char* n) {
        return std::find(names.begin(), names.end(), n) != names.end();
      };
      for (const auto& n : names)
        if (n != "onoff" && n != "composite" && n != "myopic1" &&
            n != "myopic2" && n != "ttfr")
          throw std::invalid_argument(
              "unknown policy '" + n +
              "' (valid: onoff,composite,myopic1,myopic2,ttfr)");

      std::optional<std::vector<double>> recorded;
      ojson data_echo;
      if (!sim_data.empty()) {
        Window w = parse_window(window_text);
        ResampledData d = load_and_resample(
            sim_data, load_options(layout, clamp_negative), w, period_s,
            utc_offset_s);
        std::vector<double> trace;
        for (const auto& seq : d.result.sequences)
          trace.insert(trace.end(), seq.values.begin(), seq.values.end());
        if (trace.empty())
          throw std::runtime_error("recorded trace is empty after resampling");
        recorded = std::move(trace);
        data_echo = resample_echo(d);
      }

      std::int64_t periods = sim_periods > 0 ? sim_periods : cfg.sim_periods;
      if (recorded)
        periods = std::min<std::int64_t>(
            periods, static_cast<std::int64_t>(recorded->size()));
      int episodes = sim_episodes > 0 ? sim_episodes : cfg.sim_episodes;
      int horizon = sim_horizon > 0 ? sim_horizon : cfg.ttfr_horizon;
      BeliefMode bmode = belief_text == "mixed"
                             ? BeliefMode::mixed
                             : (belief_text == "max" ? BeliefMode::max_belief
                                                     : BeliefMode::true_state);
      ChannelMode cmode =
          channel_text == "jakes" ? ChannelMode::jakes : ChannelMode::fsmc;
      if (recorded && bmode == BeliefMode::true_state)
        throw std::invalid_argument(
            "--belief oracle needs synthetic data (recorded traces have no "
            "hidden state)");

      const bool need_onoff = has("onoff") || has("ttfr");
      const bool need_comp = has("composite") || has("myopic1") || has("myopic2");
      const int onoff_mod =
          need_onoff ? mod_index_by_name(cfg.radio.mods,
                                         modulation.empty()
                                             ? cfg.radio.mods.at(0).name
                                             : modulation)
                     : 0;
      const int my1_mod =
          has("myopic1") ? mod_index_by_name(cfg.radio.mods, cfg.myopic_single_mod)
                         : 0;
      const int my2_mod =
          has("myopic2") ? mod_index_by_name(cfg.radio.mods, cfg.myopic_max_mod)
                         : 0;

      ojson rows = ojson::array();
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        ExperimentConfig pt = cfg;
        pt.gamma_c_db = grid[gi];
        pt.apply_snr();
        std::optional<MdpModel> md_on, md_comp;
        std::optional<Solution> sol_on, sol_comp;
        if (need_onoff) {
          md_on = build_mdp(mdoc.params, pt.energy, pt.channel, pt.radio,
                            pt.n_battery, PolicyClass::on_off, onoff_mod);
          if (has("onoff")) sol_on = value_iteration(*md_on, pt.solver);
        }
        if (need_comp) {
          md_comp = build_mdp(mdoc.params, pt.energy, pt.channel, pt.radio,
                              pt.n_battery, PolicyClass::composite);
          if (has("composite")) sol_comp = value_iteration(*md_comp, pt.solver);
        }

        for (std::size_t pi = 0; pi < names.size(); ++pi) {
          const std::string& name = names[pi];
          SimConfig sc;
          sc.n_periods = periods;
          sc.seed = derive_seed(derive_seed(seed, gi), 0x51ull + pi);
          sc.solar = &mdoc.params;
          sc.recorded = recorded ? &*recorded : nullptr;
          sc.bernoulli = sim_bernoulli;
          sc.initial_battery = sim_initial_battery;
          sc.channel_mode = cmode;
          if (name == "onoff") {
            sc.model = &*md_on;
            sc.policy.kind = PolicySpec::Kind::solved;
            sc.policy.policy = &sol_on->policy;
            sc.policy.belief_mode = bmode;
          } else if (name == "composite") {
            sc.model = &*md_comp;
            sc.policy.kind = PolicySpec::Kind::solved;
            sc.policy.policy = &sol_comp->policy;
            sc.policy.belief_mode = bmode;
          } else if (name == "myopic1") {
            sc.model = &*md_comp;
            sc.policy.kind = PolicySpec::Kind::myopic_single;
            sc.policy.mod_index = my1_mod;
          } else if (name == "myopic2") {
            sc.model = &*md_comp;
            sc.policy.kind = PolicySpec::Kind::myopic_max;
            sc.policy.mod_index = my2_mod;
          } else {  // ttfr
            sc.model = &*md_on;
            sc.policy.kind = PolicySpec::Kind::ttfr;
            sc.policy.mod_index = 0;
            sc.policy.horizon = horizon;
          }
          RateStats rs = simulate_rate(sc, episodes);
          rows.push_back({{"snr_db", grid[gi]},
                          {"policy", name},
                          {"rate_bps", rs.mean_bps},
                          {"ci95_bps", rs.ci95_bps},
                          {"episodes", rs.episodes},
                          {"periods", periods}});
        }
      }

      ojson report{{"tool", tool_echo()},
                   {"command", active},
                   {"config", ojson::parse(config_to_json(cfg))},
                   {"model", sim_model},
                   {"options",
                    {{"seed", seed},
                     {"policies", policies_text},
                     {"belief", belief_text},
                     {"channel", channel_text},
                     {"bernoulli", sim_bernoulli},
                     {"initial_battery", sim_initial_battery},
                     {"periods", periods},
                     {"episodes", episodes},
                     {"horizon", horizon}}}};
      if (!sim_data.empty()) {
        report["options"]["data"] = sim_data;
        report["recorded"] = data_echo;
      }
      report["rows"] = std::move(rows);
      emit(report, true);
    }
  } catch (const std::exception& e) {
    ojson err{{"error", e.what()}, {"command", active}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
