// Post-run accounting: per-function cold-start ratios and wasted memory time,
// whole-run aggregates (CSR distribution, WMT, effective memory usage ratio),
// parameter-grid sweeps, and the on-disk report artifacts.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spes/classifier.hpp"
#include "spes/config.hpp"
#include "spes/provision.hpp"
#include "spes/timing.hpp"
#include "spes/trace_store.hpp"
#include "spes/types.hpp"

namespace spes {

// Shortest round-trip decimal form, so CSV artifacts are stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, static_cast<std::size_t>(end - buf));
}

struct FunctionStats {
  std::string function_id;
  FunctionCategory category = FunctionCategory::Unknown;
  std::uint64_t invoked_slots = 0;
  std::uint64_t invocation_count = 0;
  std::uint64_t cold_starts = 0;
  std::uint64_t loaded_minutes = 0;
  std::uint64_t wasted_minutes = 0;
  double csr = 0.0;  // meaningful only when invoked() is true

  bool invoked() const { return invoked_slots > 0; }
};

// Nearest-rank quartiles of a per-function distribution.
struct Quartiles {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  std::size_t sample_count = 0;
};

inline Quartiles quartiles_of(std::vector<double> values) {
  Quartiles q;
  q.sample_count = values.size();
  if (!values.empty()) {
    q.q1 = percentile_nearest_rank(values, 25.0);
    q.q2 = percentile_nearest_rank(values, 50.0);
    q.q3 = percentile_nearest_rank(values, 75.0);
  }
  return q;
}

struct CategoryAggregate {
  std::uint64_t functions = 0;
  std::uint64_t invoked_functions = 0;
  std::uint64_t cold_starts = 0;
  std::uint64_t invoked_slots = 0;
  std::uint64_t invocation_count = 0;
  std::uint64_t wasted_minutes = 0;
  std::uint64_t loaded_minutes = 0;
  double csr_mean = 0.0;       // macro over invoked functions of the category
  Quartiles wmt_ratio;         // per-function wasted / invoked-slot count
};

struct SimAggregates {
  std::uint64_t function_count = 0;
  std::uint64_t invoked_function_count = 0;
  std::uint64_t total_invocations = 0;
  std::uint64_t total_invoked_slots = 0;
  std::uint64_t total_cold_starts = 0;
  std::uint64_t total_loaded_minutes = 0;
  std::uint64_t total_wasted_minutes = 0;  // WMT
  double csr_mean = 0.0;
  double csr_p50 = 0.0;
  double csr_p75 = 0.0;
  double csr_p90 = 0.0;
  double csr_p95 = 0.0;
  double csr_p99 = 0.0;
  double zero_cold_fraction = 0.0;    // invoked functions with no cold start
  double always_cold_fraction = 0.0;  // invoked functions with csr == 1
  double emcr = 0.0;
  double mean_memory_usage = 0.0;  // mean loaded instances per slot (instance-minutes / slots)
  std::map<FunctionCategory, CategoryAggregate> by_category;
};

inline double csr_of(std::uint64_t cold_starts, std::uint64_t invoked_slots,
                     std::uint64_t invocations, CsrDenominator d) {
  std::uint64_t den = d == CsrDenominator::InvokedSlots ? invoked_slots : invocations;
  return den == 0 ? 0.0 : static_cast<double>(cold_starts) / static_cast<double>(den);
}

inline std::vector<FunctionStats> build_function_stats(const SimulationResult& r,
                                                       const RunConfig& cfg) {
  std::vector<FunctionStats> stats(r.profiles.size());
  for (std::size_t i = 0; i < r.profiles.size(); ++i) {
    const FunctionProfile& p = r.profiles[i];
    FunctionStats& s = stats[i];
    s.function_id = p.function_id;
    s.category = p.category;
    s.invoked_slots = p.invoked_slots;
    s.invocation_count = p.invocation_count;
    s.cold_starts = p.cold_starts;
    s.loaded_minutes = r.loaded_minutes[i];
    // Every invoked slot is a loaded slot (cold starts load immediately), so
    // the remainder of the residency is wasted.
    s.wasted_minutes = s.loaded_minutes - s.invoked_slots;
    s.csr = csr_of(s.cold_starts, s.invoked_slots, s.invocation_count, cfg.csr_denominator);
  }
  return stats;
}

// Effective memory usage ratio: per slot, invoked-and-loaded over occupied.
// Macro form averages the ratio across slots with any occupancy; pooled form
// divides the totals.
inline double effective_memory_ratio(const SimulationResult& r, bool pooled) {
  if (pooled) {
    std::uint64_t inv = 0, occ = 0;
    for (std::size_t t = 0; t < r.occupied_per_slot.size(); ++t) {
      inv += r.invoked_loaded_per_slot[t];
      occ += r.occupied_per_slot[t];
    }
    return occ == 0 ? 0.0 : static_cast<double>(inv) / static_cast<double>(occ);
  }
  double sum = 0.0;
  std::uint64_t slots = 0;
  for (std::size_t t = 0; t < r.occupied_per_slot.size(); ++t) {
    if (r.occupied_per_slot[t] == 0) continue;
    sum += static_cast<double>(r.invoked_loaded_per_slot[t]) /
           static_cast<double>(r.occupied_per_slot[t]);
    ++slots;
  }
  return slots == 0 ? 0.0 : sum / static_cast<double>(slots);
}

inline SimAggregates aggregate(const std::vector<FunctionStats>& stats, const SimulationResult& r,
                               const RunConfig& cfg) {
  SimAggregates a;
  a.function_count = stats.size();
  std::vector<double> csrs;
  std::uint64_t zero_cold = 0, always_cold = 0;
  for (const FunctionStats& s : stats) {
    a.total_invocations += s.invocation_count;
    a.total_invoked_slots += s.invoked_slots;
    a.total_cold_starts += s.cold_starts;
    a.total_loaded_minutes += s.loaded_minutes;
    a.total_wasted_minutes += s.wasted_minutes;
    CategoryAggregate& c = a.by_category[s.category];
    ++c.functions;
    c.cold_starts += s.cold_starts;
    c.invoked_slots += s.invoked_slots;
    c.invocation_count += s.invocation_count;
    c.wasted_minutes += s.wasted_minutes;
    c.loaded_minutes += s.loaded_minutes;
    if (s.invoked()) {
      ++a.invoked_function_count;
      ++c.invoked_functions;
      c.csr_mean += s.csr;
      csrs.push_back(s.csr);
      if (s.cold_starts == 0) ++zero_cold;
      if (s.csr >= 1.0) ++always_cold;
    }
  }
  std::map<FunctionCategory, std::vector<double>> ratios;
  for (const FunctionStats& s : stats)
    if (s.invoked())
      ratios[s.category].push_back(static_cast<double>(s.wasted_minutes) /
                                   static_cast<double>(s.invoked_slots));
  for (auto& [cat, c] : a.by_category) {
    if (c.invoked_functions > 0) c.csr_mean /= static_cast<double>(c.invoked_functions);
    auto it = ratios.find(cat);
    if (it != ratios.end()) c.wmt_ratio = quartiles_of(std::move(it->second));
  }
  if (!csrs.empty()) {
    a.csr_mean = mean_of(csrs);
    a.csr_p50 = percentile_nearest_rank(csrs, 50.0);
    a.csr_p75 = percentile_nearest_rank(csrs, 75.0);
    a.csr_p90 = percentile_nearest_rank(csrs, 90.0);
    a.csr_p95 = percentile_nearest_rank(csrs, 95.0);
    a.csr_p99 = percentile_nearest_rank(csrs, 99.0);
    a.zero_cold_fraction = static_cast<double>(zero_cold) / static_cast<double>(csrs.size());
    a.always_cold_fraction = static_cast<double>(always_cold) / static_cast<double>(csrs.size());
  }
  a.emcr = effective_memory_ratio(r, cfg.emcr_pooled);
  if (!r.occupied_per_slot.empty())
    a.mean_memory_usage = static_cast<double>(a.total_loaded_minutes) /
                          static_cast<double>(r.occupied_per_slot.size());
  return a;
}

// Per-function wasted-minutes / invoked-slot-count ratios, grouped by category
// and summarized as quartiles. Functions never invoked in the window carry no
// ratio.
inline std::map<FunctionCategory, Quartiles> wmt_ratio_by_type(
    const std::vector<FunctionStats>& stats) {
  std::map<FunctionCategory, std::vector<double>> ratios;
  for (const FunctionStats& s : stats)
    if (s.invoked())
      ratios[s.category].push_back(static_cast<double>(s.wasted_minutes) /
                                   static_cast<double>(s.invoked_slots));
  std::map<FunctionCategory, Quartiles> out;
  for (auto& [cat, values] : ratios) out[cat] = quartiles_of(std::move(values));
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end run

struct SimReport {
  RunConfig cfg;  // effective configuration
  std::string policy;
  std::uint64_t function_count = 0;
  int train_days = 0;
  int sim_days = 0;
  int minutes_per_day = 1440;
  std::map<FunctionCategory, std::uint64_t> category_counts;  // from training
  SimAggregates aggregates;
  std::vector<FunctionStats> stats;
};

inline std::map<FunctionCategory, std::uint64_t> count_categories(const CategorizationMap& cats) {
  std::map<FunctionCategory, std::uint64_t> counts;
  for (const CategorizedFunction& c : cats) ++counts[c.category];
  return counts;
}

// Trains on the training window (unless a prebuilt categorization is supplied)
// and replays the simulation window under cfg.policy. Pass decisions_out to
// also capture the per-slot membership log.
inline SimReport run_simulation(const TraceDataset& train_ds, const TraceDataset& sim_ds,
                                const RunConfig& cfg,
                                const CategorizationMap* prebuilt = nullptr,
                                std::vector<SlotDecision>* decisions_out = nullptr) {
  CategorizationMap local;
  const CategorizationMap* cats = prebuilt;
  if (!cats && cfg.policy == "spes") {
    local = categorize_all(train_ds, cfg);
    cats = &local;
  }
  static const CategorizationMap kEmpty;
  SimulationResult r = run_policy(sim_ds, cats ? *cats : kEmpty, cfg, decisions_out != nullptr);
  if (decisions_out) *decisions_out = std::move(r.decisions);

  SimReport rep;
  rep.cfg = cfg;
  rep.policy = cfg.policy;
  rep.function_count = sim_ds.size();
  rep.train_days = train_ds.days;
  rep.sim_days = sim_ds.days;
  rep.minutes_per_day = sim_ds.minutes_per_day;
  if (cats) rep.category_counts = count_categories(*cats);
  rep.stats = build_function_stats(r, cfg);
  rep.aggregates = aggregate(rep.stats, r, cfg);
  return rep;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepPoint {
  int theta_prewarm = 0;
  int givenup_multiplier = 1;
  double q3_csr = 0.0;
  double normalized_memory = 0.0;  // instance-minutes vs. the default-parameter run
  std::uint64_t total_wmt = 0;
  std::uint64_t cold_starts = 0;         // not exported; kept for monotonicity checks
  std::uint64_t loaded_minutes = 0;      // instance-minutes
};

// One full run per (theta_prewarm, givenup_multiplier) grid point, reusing a
// single categorization: the trade-off knobs act at provision time, so the
// trained model is identical across points. Memory (instance-minutes) is
// normalized to the run at the config's own parameter values, simulated as an
// extra point when the grid does not contain it.
inline std::vector<SweepPoint> sweep_grid(const TraceDataset& train_ds, const TraceDataset& sim_ds,
                                          const RunConfig& cfg,
                                          const std::vector<int>& prewarm_values,
                                          const std::vector<int>& multiplier_values) {
  if (prewarm_values.empty() || multiplier_values.empty())
    throw std::invalid_argument("sweep_grid: empty grid");
  CategorizationMap cats = categorize_all(train_ds, cfg);

  auto point_at = [&](int prewarm, int multiplier) -> SweepPoint {
    RunConfig point_cfg = cfg;
    point_cfg.theta_prewarm = prewarm;
    point_cfg.givenup_multiplier = multiplier;
    SimulationResult r = run_spes(sim_ds, cats, point_cfg);
    std::vector<FunctionStats> stats = build_function_stats(r, point_cfg);
    SimAggregates a = aggregate(stats, r, point_cfg);
    SweepPoint p;
    p.theta_prewarm = prewarm;
    p.givenup_multiplier = multiplier;
    p.q3_csr = a.csr_p75;
    p.total_wmt = a.total_wasted_minutes;
    p.cold_starts = a.total_cold_starts;
    p.loaded_minutes = a.total_loaded_minutes;
    return p;
  };

  std::vector<SweepPoint> points;
  double base_memory = -1.0;
  for (int prewarm : prewarm_values) {
    for (int multiplier : multiplier_values) {
      points.push_back(point_at(prewarm, multiplier));
      if (prewarm == cfg.theta_prewarm && multiplier == cfg.givenup_multiplier)
        base_memory = static_cast<double>(points.back().loaded_minutes);
    }
  }
  if (base_memory < 0.0)
    base_memory = static_cast<double>(point_at(cfg.theta_prewarm, cfg.givenup_multiplier).loaded_minutes);
  for (SweepPoint& p : points)
    p.normalized_memory =
        base_memory == 0.0 ? 0.0 : static_cast<double>(p.loaded_minutes) / base_memory;
  return points;
}

// ---------------------------------------------------------------------------
// Artifacts

inline nlohmann::json to_json(const SimAggregates& a) {
  nlohmann::json by_cat = nlohmann::json::object();
  for (const auto& [cat, c] : a.by_category) {
    by_cat[to_string(cat)] = {
        {"functions", c.functions},       {"invoked_functions", c.invoked_functions},
        {"cold_starts", c.cold_starts},   {"invoked_slots", c.invoked_slots},
        {"invocations", c.invocation_count},
        {"wasted_minutes", c.wasted_minutes}, {"loaded_minutes", c.loaded_minutes},
        {"csr_mean", c.csr_mean},
        {"wmt_ratio_quartiles", {c.wmt_ratio.q1, c.wmt_ratio.q2, c.wmt_ratio.q3}},
    };
  }
  return nlohmann::json{
      {"function_count", a.function_count},
      {"invoked_function_count", a.invoked_function_count},
      {"total_invocations", a.total_invocations},
      {"total_invoked_slots", a.total_invoked_slots},
      {"total_cold_starts", a.total_cold_starts},
      {"total_loaded_minutes", a.total_loaded_minutes},
      {"total_wasted_minutes", a.total_wasted_minutes},
      {"csr_mean", a.csr_mean},
      {"csr_p50", a.csr_p50},
      {"csr_p75", a.csr_p75},
      {"csr_p90", a.csr_p90},
      {"csr_p95", a.csr_p95},
      {"csr_p99", a.csr_p99},
      {"zero_cold_fraction", a.zero_cold_fraction},
      {"always_cold_fraction", a.always_cold_fraction},
      {"emcr", a.emcr},
      {"mean_memory_usage", a.mean_memory_usage},
      {"by_category", by_cat},
  };
}

inline nlohmann::json to_json(const SimReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [cat, count] : r.category_counts) cats[to_string(cat)] = count;
  return nlohmann::json{
      {"policy", r.policy},
      {"dataset",
       {{"functions", r.function_count},
        {"train_days", r.train_days},
        {"sim_days", r.sim_days},
        {"minutes_per_day", r.minutes_per_day}}},
      {"config", to_json(r.cfg)},
      {"category_counts", cats},
      {"aggregates", to_json(r.aggregates)},
  };
}

// One row per function invoked in the window; never-invoked functions have no
// CSR and are left out.
inline void write_per_function_csv(const std::vector<FunctionStats>& stats,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_per_function_csv: cannot open " + path);
  out << "function_id,category,invocations,cold_starts,csr,wmt,loaded_minutes\n";
  for (const FunctionStats& s : stats) {
    if (!s.invoked()) continue;
    out << s.function_id << ',' << to_string(s.category) << ',' << s.invocation_count << ','
        << s.cold_starts << ',' << format_double(s.csr) << ',' << s.wasted_minutes << ','
        << s.loaded_minutes << '\n';
  }
}

// Empirical CDF of per-function cold-start ratios over invoked functions.
inline void write_csr_cdf_csv(const std::vector<FunctionStats>& stats, const std::string& path) {
  std::vector<double> csrs;
  for (const FunctionStats& s : stats)
    if (s.invoked()) csrs.push_back(s.csr);
  std::sort(csrs.begin(), csrs.end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csr_cdf_csv: cannot open " + path);
  out << "csr,cum_fraction\n";
  for (std::size_t i = 0; i < csrs.size(); ++i) {
    out << format_double(csrs[i]) << ','
        << format_double(static_cast<double>(i + 1) / static_cast<double>(csrs.size())) << '\n';
  }
}

inline void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sweep_csv: cannot open " + path);
  out << "theta_prewarm,givenup_multiplier,q3_csr,normalized_memory,total_wmt\n";
  for (const SweepPoint& p : points) {
    out << p.theta_prewarm << ',' << p.givenup_multiplier << ',' << format_double(p.q3_csr) << ','
        << format_double(p.normalized_memory) << ',' << p.total_wmt << '\n';
  }
}

// Writes report.json, per_function.csv, and csr_cdf.csv into dir (which must
// already exist). The JSON is fully deterministic for a given dataset + config.
inline void export_report(const SimReport& r, const std::string& dir) {
  {
    std::ofstream out(dir + "/report.json");
    if (!out) throw std::runtime_error("export_report: cannot open " + dir + "/report.json");
    out << to_json(r).dump(2) << '\n';
  }
  write_per_function_csv(r.stats, dir + "/per_function.csv");
  write_csr_cdf_csv(r.stats, dir + "/csr_cdf.csv");
}

}  // namespace spes
