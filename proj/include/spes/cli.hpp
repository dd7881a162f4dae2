// Command-line front end: gen / train / simulate / sweep / report subcommands
// over the library. Configuration resolves defaults -> SPES_SIM_CONFIG file ->
// --config file -> individual flags; exit code 0 on success, 2 on usage or
// configuration errors, 3 on data or runtime errors.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spes/classifier.hpp"
#include "spes/config.hpp"
#include "spes/correlation.hpp"
#include "spes/metrics.hpp"
#include "spes/provision.hpp"
#include "spes/synthetic.hpp"
#include "spes/trace_store.hpp"

namespace spes::cli {

namespace fs = std::filesystem;

// Day files written by `gen` (and by write_trace_csv generally) look like
// <stem>.dNN.csv; lexicographic order is day order.
inline std::vector<std::string> list_trace_files(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    auto dot = name.rfind(".csv");
    if (dot == std::string::npos || dot + 4 != name.size()) continue;
    auto day = name.rfind(".d", dot);
    if (day == std::string::npos || day + 2 >= dot) continue;
    bool digits = true;
    for (std::size_t i = day + 2; i < dot; ++i) digits = digits && std::isdigit(name[i]);
    if (digits) files.push_back(entry.path().string());
  }
  if (files.empty()) throw std::runtime_error("no trace day files (*.dNN.csv) in " + dir);
  std::sort(files.begin(), files.end());
  return files;
}

// Flags land in an overlay applied on top of any config files, so only the
// options the user actually passed take effect.
inline void add_config_flags(CLI::App* cmd, nlohmann::json& overlay) {
  auto set_int = [&overlay](const char* key) {
    return [&overlay, key](std::int64_t v) { overlay[key] = v; };
  };
  auto set_double = [&overlay](const char* key) {
    return [&overlay, key](double v) { overlay[key] = v; };
  };
  auto set_string = [&overlay](const char* key) {
    return [&overlay, key](const std::string& v) { overlay[key] = v; };
  };
  auto set_true = [&overlay](const char* key) {
    return [&overlay, key](std::int64_t) { overlay[key] = true; };
  };
  cmd->add_option_function<std::string>("--policy", set_string("policy"),
                                        "Provisioning policy: spes or keepalive");
  cmd->add_option_function<std::int64_t>("--keepalive", set_int("keepalive_minutes"),
                                         "Keep-alive duration in minutes");
  cmd->add_option_function<double>("--alpha", set_double("alpha"),
                                   "Cold-start weight in the strategy duel");
  cmd->add_option_function<std::int64_t>("--validation-days", set_int("validation_days"),
                                         "Trailing training days held out for validation");
  cmd->add_option_function<std::int64_t>("--theta-prewarm", set_int("theta_prewarm"),
                                         "Preload window half-width in minutes");
  cmd->add_option_function<std::int64_t>("--givenup-multiplier", set_int("givenup_multiplier"),
                                         "Scales every give-up threshold");
  cmd->add_option_function<std::int64_t>("--workers", set_int("workers"),
                                         "Worker threads for categorization");
  cmd->add_option_function<std::int64_t>("--seed", set_int("seed"), "Random seed");
  cmd->add_option_function<std::string>("--csr-denominator", set_string("csr_denominator"),
                                        "invoked_slots or invocation_count");
  cmd->add_flag_function("--emcr-pooled", set_true("emcr_pooled"),
                         "Pool the memory ratio instead of averaging per slot");
  cmd->add_flag_function("--carry-warm", set_true("carry_warm"),
                         "Start with always-warm functions loaded");
  cmd->add_flag_function("--no-corr", set_true("disable_corr"),
                         "Disable the correlated strategy during training");
  cmd->add_flag_function("--no-online-corr", set_true("disable_online_corr"),
                         "Disable online trackers for unseen functions");
  cmd->add_flag_function("--no-forgetting", set_true("disable_forgetting"),
                         "Disable suffix-window retries");
  cmd->add_flag_function("--no-adjusting", set_true("disable_adjusting"),
                         "Freeze predictive values during simulation");
}

inline RunConfig make_config(const std::string& config_flag, const nlohmann::json& overlay) {
  RunConfig cfg;
  if (const char* env = std::getenv("SPES_SIM_CONFIG"); env && *env)
    cfg = load_config_file(env, cfg);
  if (!config_flag.empty()) cfg = load_config_file(config_flag, cfg);
  merge_json(cfg, overlay);
  cfg.validate();
  return cfg;
}

inline void print_summary(const nlohmann::json& rep, std::ostream& out) {
  const auto& a = rep.at("aggregates");
  const auto& d = rep.at("dataset");
  out << "policy             " << rep.at("policy").get<std::string>() << '\n'
      << "functions          " << d.at("functions").get<std::uint64_t>() << " (invoked "
      << a.at("invoked_function_count").get<std::uint64_t>() << ")\n"
      << "train / sim days   " << d.at("train_days").get<int>() << " / "
      << d.at("sim_days").get<int>() << '\n'
      << "cold starts        " << a.at("total_cold_starts").get<std::uint64_t>() << '\n'
      << "csr mean/p50/p95   " << a.at("csr_mean").get<double>() << " / "
      << a.at("csr_p50").get<double>() << " / " << a.at("csr_p95").get<double>() << '\n'
      << "zero/always cold   " << a.at("zero_cold_fraction").get<double>() << " / "
      << a.at("always_cold_fraction").get<double>() << '\n'
      << "wasted minutes     " << a.at("total_wasted_minutes").get<std::uint64_t>() << '\n'
      << "loaded minutes     " << a.at("total_loaded_minutes").get<std::uint64_t>() << '\n'
      << "emcr               " << a.at("emcr").get<double>() << '\n';
  if (rep.contains("category_counts") && !rep.at("category_counts").empty()) {
    out << "categories         ";
    bool first = true;
    for (auto it = rep.at("category_counts").begin(); it != rep.at("category_counts").end(); ++it) {
      if (!first) out << ' ';
      out << it.key() << '=' << it.value().get<std::uint64_t>();
      first = false;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_gen(const std::string& spec_path, const std::string& out_dir,
                    const std::string& stem) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot open spec file " + spec_path);
  nlohmann::json spec_json;
  try {
    in >> spec_json;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("spec file " + spec_path + ": " + e.what());
  }
  SyntheticResult result = generate_synthetic(spec_json);
  fs::create_directories(out_dir);
  std::vector<std::string> paths = write_trace_csv(result.dataset, out_dir, stem);
  {
    std::ofstream labels(out_dir + "/labels.csv");
    if (!labels) throw std::runtime_error("cannot open " + out_dir + "/labels.csv");
    labels << "function_id,label\n";
    for (const auto& [id, cat] : result.labels) labels << id << ',' << to_string(cat) << '\n';
  }
  if (!result.chains.empty()) {
    std::ofstream chains(out_dir + "/chains.csv");
    if (!chains) throw std::runtime_error("cannot open " + out_dir + "/chains.csv");
    chains << "leader_id,follower_id,lag\n";
    for (const ChainedPair& c : result.chains)
      chains << c.leader_id << ',' << c.follower_id << ',' << c.lag << '\n';
  }
  std::cout << "generated " << result.dataset.size() << " functions over "
            << result.dataset.days << " days (" << paths.size() << " day files) in " << out_dir
            << '\n';
}

inline void cmd_train(const std::string& trace_dir, int train_days, const std::string& out_dir,
                      const RunConfig& cfg) {
  std::vector<std::string> files = list_trace_files(trace_dir);
  if (train_days <= 0) train_days = static_cast<int>(files.size());
  TraceDataset full = load_azure_csv(files);
  TraceDataset train_ds =
      train_days == full.days ? std::move(full) : slice_days(full, 0, train_days);
  CategorizationMap cats = categorize_all(train_ds, cfg);
  fs::create_directories(out_dir);
  write_categorization_csv(cats, out_dir + "/categorization.csv");
  write_links_csv(collect_links(cats), out_dir + "/links.csv");
  std::cout << "categorized " << cats.size() << " functions over " << train_ds.days
            << " training days\n";
  for (const auto& [cat, count] : count_categories(cats))
    std::cout << "  " << to_string(cat) << " " << count << '\n';
}

struct SimulateArgs {
  std::string trace_dir;
  int train_days = 0;
  int sim_days = 0;  // 0: everything after the training window
  std::string out_dir;
  std::string categorization_path;
  std::string links_path;
  bool record_decisions = false;
};

inline void cmd_simulate(const SimulateArgs& args, const RunConfig& cfg) {
  std::vector<std::string> files = list_trace_files(args.trace_dir);
  TraceDataset full = load_azure_csv(files);
  if (args.train_days < 1 || args.train_days >= full.days)
    throw std::invalid_argument("simulate: --train-days must be in [1, days-1]");
  int sim_days = args.sim_days > 0 ? args.sim_days : full.days - args.train_days;
  auto [train_ds, sim_ds] = split_dataset(full, args.train_days, sim_days);

  CategorizationMap cats;
  const CategorizationMap* prebuilt = nullptr;
  if (!args.categorization_path.empty()) {
    cats = load_categorization_csv(args.categorization_path);
    if (!args.links_path.empty()) attach_links(cats, load_links_csv(args.links_path));
    rebuild_offline_stats(cats, train_ds, cfg);
    prebuilt = &cats;
  }

  std::vector<SlotDecision> decisions;
  SimReport rep = run_simulation(train_ds, sim_ds, cfg, prebuilt,
                                 args.record_decisions ? &decisions : nullptr);
  fs::create_directories(args.out_dir);
  export_report(rep, args.out_dir);
  if (args.record_decisions) write_decisions_csv(decisions, sim_ds, args.out_dir + "/decisions.csv");
  print_summary(to_json(rep), std::cout);
  std::cout << "report written to " << args.out_dir << '\n';
}

inline void cmd_sweep(const std::string& trace_dir, int train_days, int sim_days,
                      const std::vector<int>& prewarm_values,
                      const std::vector<int>& multiplier_values, const std::string& out_dir,
                      const RunConfig& cfg) {
  std::vector<std::string> files = list_trace_files(trace_dir);
  TraceDataset full = load_azure_csv(files);
  if (train_days < 1 || train_days >= full.days)
    throw std::invalid_argument("sweep: --train-days must be in [1, days-1]");
  int sim = sim_days > 0 ? sim_days : full.days - train_days;
  auto [train_ds, sim_ds] = split_dataset(full, train_days, sim);
  std::vector<SweepPoint> points = sweep_grid(train_ds, sim_ds, cfg, prewarm_values,
                                              multiplier_values);
  fs::create_directories(out_dir);
  write_sweep_csv(points, out_dir + "/sweep.csv");
  std::cout << "prewarm multiplier q3_csr normalized_memory total_wmt\n";
  for (const SweepPoint& p : points) {
    std::cout << p.theta_prewarm << ' ' << p.givenup_multiplier << ' ' << format_double(p.q3_csr)
              << ' ' << format_double(p.normalized_memory) << ' ' << p.total_wmt << '\n';
  }
  std::cout << "sweep written to " << out_dir << "/sweep.csv\n";
}

inline void cmd_report(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw std::runtime_error("cannot open " + report_path);
  nlohmann::json rep;
  try {
    in >> rep;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("report " + report_path + ": " + e.what());
  }
  print_summary(rep, std::cout);
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Trace-driven simulator for differentiated serverless provisioning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "spes-sim 0.1.0");

  std::string config_path;
  nlohmann::json overlay = nlohmann::json::object();

  std::string gen_spec, gen_out, gen_stem = "trace";
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic trace from a spec file");
  gen->add_option("--spec", gen_spec, "Synthetic spec JSON")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--stem", gen_stem, "Day-file stem");

  std::string train_trace, train_out;
  int train_train_days = 0;
  CLI::App* train = app.add_subcommand("train", "Categorize functions from a trace");
  train->add_option("--trace", train_trace, "Trace directory")->required();
  train->add_option("--train-days", train_train_days, "Days to train on (default: all)");
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--config", config_path, "Config JSON file");
  add_config_flags(train, overlay);

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "Replay a trace under a policy");
  simulate->add_option("--trace", sim_args.trace_dir, "Trace directory")->required();
  simulate->add_option("--train-days", sim_args.train_days, "Training window length")->required();
  simulate->add_option("--sim-days", sim_args.sim_days, "Simulation window length (default: rest)");
  simulate->add_option("--out", sim_args.out_dir, "Output directory")->required();
  simulate->add_option("--categorization", sim_args.categorization_path,
                       "Reuse a categorization CSV instead of training");
  simulate->add_option("--links", sim_args.links_path, "Link CSV matching --categorization");
  simulate->add_flag("--record-decisions", sim_args.record_decisions,
                     "Write the per-slot membership log");
  simulate->add_option("--config", config_path, "Config JSON file");
  add_config_flags(simulate, overlay);

  std::string sweep_trace, sweep_out;
  int sweep_train_days = 0, sweep_sim_days = 0;
  std::vector<int> sweep_prewarms = {0, 1, 2, 3, 4};
  std::vector<int> sweep_multipliers = {1, 2, 3, 4, 5};
  CLI::App* sweep = app.add_subcommand("sweep", "Grid-sweep the trade-off parameters");
  sweep->add_option("--trace", sweep_trace, "Trace directory")->required();
  sweep->add_option("--train-days", sweep_train_days, "Training window length")->required();
  sweep->add_option("--sim-days", sweep_sim_days, "Simulation window length (default: rest)");
  sweep->add_option("--prewarm", sweep_prewarms, "Preload half-widths to sweep")->delimiter(',');
  sweep->add_option("--multipliers", sweep_multipliers, "Give-up multipliers to sweep")
      ->delimiter(',');
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--config", config_path, "Config JSON file");
  add_config_flags(sweep, overlay);

  std::string report_path;
  CLI::App* report = app.add_subcommand("report", "Summarize a report.json");
  report->add_option("--report", report_path, "Path to report.json")->required();

  try {
    app.parse(argc, argv);
    if (gen->parsed()) {
      cmd_gen(gen_spec, gen_out, gen_stem);
    } else if (train->parsed()) {
      cmd_train(train_trace, train_train_days, train_out, make_config(config_path, overlay));
    } else if (simulate->parsed()) {
      cmd_simulate(sim_args, make_config(config_path, overlay));
    } else if (sweep->parsed()) {
      cmd_sweep(sweep_trace, sweep_train_days, sweep_sim_days, sweep_prewarms, sweep_multipliers,
                sweep_out, make_config(config_path, overlay));
    } else if (report->parsed()) {
      cmd_report(report_path);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace spes::cli
