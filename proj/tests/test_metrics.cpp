#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spes/metrics.hpp"
#include "spes/synthetic.hpp"
#include "naive_reference.hpp"

using namespace spes;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("spes-metrics-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

SyntheticGroup group(const std::string& kind, int count, int period = 60, int jitter = 0) {
  SyntheticGroup g;
  g.kind = kind;
  g.count = count;
  g.period = period;
  g.jitter = jitter;
  return g;
}

FunctionProfile profile(const std::string& id, FunctionCategory cat, std::uint64_t invoked,
                        std::uint64_t invocations, std::uint64_t colds) {
  FunctionProfile p;
  p.function_id = id;
  p.category = cat;
  p.invoked_slots = invoked;
  p.invocation_count = invocations;
  p.cold_starts = colds;
  return p;
}

// Three-function fixture with hand-computable aggregates: a leaky Regular
// function, a perfectly provisioned one of the same category, and a silent
// Dense one that must stay out of every ratio distribution.
SimulationResult fixture() {
  SimulationResult r;
  r.profiles = {profile("a", FunctionCategory::Regular, 10, 14, 2),
                profile("b", FunctionCategory::Regular, 10, 10, 0),
                profile("c", FunctionCategory::Dense, 0, 0, 0)};
  r.loaded_minutes = {40, 10, 0};
  r.occupied_per_slot = {2, 4, 0, 1, 0};
  r.invoked_loaded_per_slot = {1, 1, 0, 1, 0};
  return r;
}

}  // namespace

TEST_CASE("per-function stats satisfy the residency identity", "[metrics]") {
  RunConfig cfg;
  std::vector<FunctionStats> stats = build_function_stats(fixture(), cfg);
  REQUIRE(stats.size() == 3);

  CHECK(stats[0].wasted_minutes == 30);  // 40 loaded, 10 invoked
  CHECK(stats[1].wasted_minutes == 0);
  CHECK(stats[2].wasted_minutes == 0);
  for (const FunctionStats& s : stats)
    CHECK(s.wasted_minutes == s.loaded_minutes - s.invoked_slots);

  CHECK(stats[0].csr == 0.2);  // 2 colds over 10 invoked slots
  CHECK(stats[1].csr == 0.0);
  CHECK(stats[2].invoked() == false);

  SECTION("the ratio can be taken over raw invocations instead") {
    RunConfig per_inv = cfg;
    per_inv.csr_denominator = CsrDenominator::InvocationCount;
    std::vector<FunctionStats> by_inv = build_function_stats(fixture(), per_inv);
    CHECK(by_inv[0].csr == 2.0 / 14.0);  // multiple invocations share a slot
  }
}

TEST_CASE("cold-start ratio handles an empty denominator", "[metrics]") {
  CHECK(csr_of(2, 8, 9, CsrDenominator::InvokedSlots) == 0.25);
  CHECK(csr_of(2, 8, 9, CsrDenominator::InvocationCount) == 2.0 / 9.0);
  CHECK(csr_of(0, 0, 0, CsrDenominator::InvokedSlots) == 0.0);
}

TEST_CASE("effective memory ratio, macro and pooled", "[metrics]") {
  SimulationResult r = fixture();

  // macro: mean of 1/2, 1/4, 1/1 over the three occupied slots
  CHECK(effective_memory_ratio(r, false) == Catch::Approx((0.5 + 0.25 + 1.0) / 3.0));
  // pooled: 3 invoked-loaded over 7 occupied
  CHECK(effective_memory_ratio(r, true) == Catch::Approx(3.0 / 7.0));

  SECTION("an idle window scores zero either way") {
    SimulationResult idle;
    idle.occupied_per_slot = {0, 0, 0};
    idle.invoked_loaded_per_slot = {0, 0, 0};
    CHECK(effective_memory_ratio(idle, false) == 0.0);
    CHECK(effective_memory_ratio(idle, true) == 0.0);
  }

  SECTION("macro form agrees with a direct recomputation on a live run") {
    std::mt19937 rng(5);
    SyntheticSpec spec;
    spec.days = 2;
    spec.seed = 11;
    spec.groups = {group("periodic", 4, 30), group("dense", 2), group("bursty", 2)};
    TraceDataset ds = generate_synthetic(spec).dataset;
    SimulationResult live = run_keepalive(ds, 10);
    naive::Result want = naive::replay_keepalive(ds, 10);
    CHECK(effective_memory_ratio(live, false) == Catch::Approx(naive::emcr_macro(want)));
  }
}

TEST_CASE("aggregates reduce the per-function stats exactly", "[metrics]") {
  RunConfig cfg;
  SimulationResult r = fixture();
  std::vector<FunctionStats> stats = build_function_stats(r, cfg);
  SimAggregates a = aggregate(stats, r, cfg);

  CHECK(a.function_count == 3);
  CHECK(a.invoked_function_count == 2);  // the silent function is out
  CHECK(a.total_invocations == 24);
  CHECK(a.total_invoked_slots == 20);
  CHECK(a.total_cold_starts == 2);
  CHECK(a.total_loaded_minutes == 50);
  CHECK(a.total_wasted_minutes == 30);

  // distribution over the two invoked functions: {0.0, 0.2}
  CHECK(a.csr_mean == Catch::Approx(0.1));
  CHECK(a.csr_p50 == 0.0);   // nearest rank 1 of 2
  CHECK(a.csr_p75 == 0.2);   // nearest rank 2 of 2
  CHECK(a.csr_p99 == 0.2);
  CHECK(a.zero_cold_fraction == 0.5);
  CHECK(a.always_cold_fraction == 0.0);
  CHECK(a.mean_memory_usage == Catch::Approx(10.0));  // 50 minutes over 5 slots

  const CategoryAggregate& reg = a.by_category.at(FunctionCategory::Regular);
  CHECK(reg.functions == 2);
  CHECK(reg.invoked_functions == 2);
  CHECK(reg.cold_starts == 2);
  CHECK(reg.wasted_minutes == 30);
  CHECK(reg.csr_mean == Catch::Approx(0.1));
  CHECK(reg.wmt_ratio.sample_count == 2);  // ratios {3.0, 0.0}
  CHECK(reg.wmt_ratio.q1 == 0.0);
  CHECK(reg.wmt_ratio.q2 == 0.0);
  CHECK(reg.wmt_ratio.q3 == 3.0);

  const CategoryAggregate& dense = a.by_category.at(FunctionCategory::Dense);
  CHECK(dense.functions == 1);
  CHECK(dense.invoked_functions == 0);
  CHECK(dense.wmt_ratio.sample_count == 0);

  SECTION("a fully silent corpus leaves the distribution empty") {
    SimulationResult silent;
    silent.profiles = {profile("x", FunctionCategory::Unknown, 0, 0, 0)};
    silent.loaded_minutes = {0};
    silent.occupied_per_slot = {0, 0};
    silent.invoked_loaded_per_slot = {0, 0};
    std::vector<FunctionStats> ss = build_function_stats(silent, cfg);
    SimAggregates sa = aggregate(ss, silent, cfg);
    CHECK(sa.invoked_function_count == 0);
    CHECK(sa.csr_mean == 0.0);
    CHECK(sa.zero_cold_fraction == 0.0);
  }
}

TEST_CASE("wasted-time ratios group by category", "[metrics]") {
  RunConfig cfg;
  std::vector<FunctionStats> stats = build_function_stats(fixture(), cfg);
  auto by_type = wmt_ratio_by_type(stats);

  REQUIRE(by_type.count(FunctionCategory::Regular) == 1);
  CHECK(by_type.count(FunctionCategory::Dense) == 0);  // only silent functions there
  CHECK(by_type[FunctionCategory::Regular].q3 == 3.0);  // 30 wasted over 10 invoked slots

  SECTION("quartiles of a singleton collapse to the value") {
    Quartiles q = quartiles_of({5.0});
    CHECK(q.q1 == 5.0);
    CHECK(q.q2 == 5.0);
    CHECK(q.q3 == 5.0);
    CHECK(q.sample_count == 1);
  }

  SECTION("empty input yields an empty summary") {
    Quartiles q = quartiles_of({});
    CHECK(q.sample_count == 0);
    CHECK(q.q2 == 0.0);
  }

  SECTION("the grouped view matches the aggregate's per-category quartiles") {
    SimulationResult r = fixture();
    SimAggregates a = aggregate(stats, r, cfg);
    for (const auto& [cat, q] : by_type) {
      CHECK(a.by_category.at(cat).wmt_ratio.q1 == q.q1);
      CHECK(a.by_category.at(cat).wmt_ratio.q3 == q.q3);
    }
  }
}

TEST_CASE("per-function CSV lists exactly the invoked functions", "[metrics]") {
  RunConfig cfg;
  std::vector<FunctionStats> stats = build_function_stats(fixture(), cfg);
  fs::path dir = fresh_dir("perfn");
  write_per_function_csv(stats, (dir / "per_function.csv").string());

  std::vector<std::string> lines = lines_of(slurp(dir / "per_function.csv"));
  REQUIRE(lines.size() == 3);  // header + two invoked functions
  CHECK(lines[0] == "function_id,category,invocations,cold_starts,csr,wmt,loaded_minutes");
  CHECK(lines[1] == "a,regular,14,2,0.2,30,40");
  CHECK(lines[2] == "b,regular,10,0,0,0,10");
}

TEST_CASE("cold-start CDF ends at one and never decreases", "[metrics]") {
  RunConfig cfg;
  std::vector<FunctionStats> stats = build_function_stats(fixture(), cfg);
  fs::path dir = fresh_dir("cdf");
  write_csr_cdf_csv(stats, (dir / "csr_cdf.csv").string());

  std::vector<std::string> lines = lines_of(slurp(dir / "csr_cdf.csv"));
  REQUIRE(lines.size() == 3);  // header + one point per invoked function
  CHECK(lines[0] == "csr,cum_fraction");
  CHECK(lines[1] == "0,0.5");
  CHECK(lines[2] == "0.2,1");

  double prev_csr = -1.0, prev_frac = -1.0, last_frac = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string csr_s, frac_s;
    std::getline(row, csr_s, ',');
    std::getline(row, frac_s, ',');
    double csr = std::stod(csr_s), frac = std::stod(frac_s);
    CHECK(csr >= prev_csr);
    CHECK(frac > prev_frac);
    prev_csr = csr;
    prev_frac = frac;
    last_frac = frac;
  }
  CHECK(last_frac == 1.0);
}

TEST_CASE("a full simulation report is internally consistent", "[metrics]") {
  SyntheticSpec spec;
  spec.days = 4;
  spec.seed = 23;
  SyntheticGroup sparse = group("sparse_random", 2);
  sparse.rate = 0.003;
  spec.groups = {group("always_active", 1), group("periodic", 3, 45), group("dense", 2),
                 group("bursty", 2), sparse};
  TraceDataset full = generate_synthetic(spec).dataset;
  auto [train, sim] = split_dataset(full, 2, 2);
  RunConfig cfg;

  SimReport rep = run_simulation(train, sim, cfg);
  CHECK(rep.policy == "spes");
  CHECK(rep.function_count == full.size());
  CHECK(rep.train_days == 2);
  CHECK(rep.sim_days == 2);

  std::uint64_t cats_total = 0;
  for (const auto& [cat, count] : rep.category_counts) cats_total += count;
  CHECK(cats_total == full.size());

  // aggregates re-derive from the stats rows
  std::uint64_t colds = 0, wasted = 0, loaded = 0;
  for (const FunctionStats& s : rep.stats) {
    colds += s.cold_starts;
    wasted += s.wasted_minutes;
    loaded += s.loaded_minutes;
  }
  CHECK(rep.aggregates.total_cold_starts == colds);
  CHECK(rep.aggregates.total_wasted_minutes == wasted);
  CHECK(rep.aggregates.total_loaded_minutes == loaded);
  CHECK(rep.aggregates.emcr >= 0.0);
  CHECK(rep.aggregates.emcr <= 1.0);

  SECTION("the keep-alive policy skips training entirely") {
    RunConfig ka = cfg;
    ka.policy = "keepalive";
    SimReport krep = run_simulation(train, sim, ka);
    CHECK(krep.policy == "keepalive");
    CHECK(krep.category_counts.empty());
    CHECK(krep.aggregates.total_invoked_slots == rep.aggregates.total_invoked_slots);
  }

  SECTION("a prebuilt categorization short-circuits training") {
    CategorizationMap cats = categorize_all(train, cfg);
    SimReport pre = run_simulation(train, sim, cfg, &cats);
    CHECK(pre.aggregates.total_cold_starts == rep.aggregates.total_cold_starts);
    CHECK(pre.aggregates.total_wasted_minutes == rep.aggregates.total_wasted_minutes);
  }
}

TEST_CASE("report artifacts are byte-identical across exports", "[metrics]") {
  SyntheticSpec spec;
  spec.days = 3;
  spec.seed = 31;
  spec.groups = {group("periodic", 2, 20), group("dense", 2)};
  TraceDataset full = generate_synthetic(spec).dataset;
  auto [train, sim] = split_dataset(full, 2, 1);
  RunConfig cfg;
  SimReport rep = run_simulation(train, sim, cfg);

  fs::path a = fresh_dir("export-a");
  fs::path b = fresh_dir("export-b");
  export_report(rep, a.string());
  export_report(rep, b.string());

  for (const char* name : {"report.json", "per_function.csv", "csr_cdf.csv"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }

  SECTION("the JSON report carries the expected shape") {
    nlohmann::json j = nlohmann::json::parse(slurp(a / "report.json"));
    CHECK(j["policy"] == "spes");
    CHECK(j["dataset"]["functions"] == full.size());
    CHECK(j["config"]["theta_prewarm"] == 2);
    CHECK(j["aggregates"].contains("csr_p75"));
    CHECK(j["aggregates"].contains("emcr"));
    CHECK(j["aggregates"]["by_category"].is_object());
    for (const auto& [cat, count] : rep.category_counts)
      CHECK(j["category_counts"].contains(to_string(cat)));
  }
}

TEST_CASE("sweeps normalize memory to the configured point", "[metrics]") {
  SyntheticSpec spec;
  spec.days = 4;
  spec.seed = 47;
  spec.groups = {group("periodic", 3, 60), group("periodic", 2, 25, 1), group("dense", 2),
                 group("bursty", 2)};
  TraceDataset full = generate_synthetic(spec).dataset;
  auto [train, sim] = split_dataset(full, 2, 2);
  RunConfig cfg;  // theta_prewarm 2, givenup_multiplier 1

  std::vector<int> prewarms = {0, 2, 4};
  std::vector<int> multipliers = {1, 3};
  std::vector<SweepPoint> grid = sweep_grid(train, sim, cfg, prewarms, multipliers);
  REQUIRE(grid.size() == prewarms.size() * multipliers.size());

  double base_loaded = 0.0;
  for (const SweepPoint& p : grid) {
    if (p.theta_prewarm == cfg.theta_prewarm && p.givenup_multiplier == cfg.givenup_multiplier) {
      CHECK(p.normalized_memory == 1.0);  // self-normalized
      base_loaded = static_cast<double>(p.loaded_minutes);
    }
  }
  REQUIRE(base_loaded > 0.0);
  for (const SweepPoint& p : grid)
    CHECK(p.normalized_memory ==
          Catch::Approx(static_cast<double>(p.loaded_minutes) / base_loaded));

  SECTION("a grid omitting the configured point normalizes against an extra run") {
    std::vector<SweepPoint> off = sweep_grid(train, sim, cfg, {0, 4}, {3});
    for (const SweepPoint& p : off) {
      for (const SweepPoint& q : grid) {
        if (q.theta_prewarm == p.theta_prewarm && q.givenup_multiplier == p.givenup_multiplier)
          CHECK(p.normalized_memory == Catch::Approx(q.normalized_memory));
      }
    }
  }

  SECTION("an empty grid is rejected") {
    CHECK_THROWS_AS(sweep_grid(train, sim, cfg, {}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_grid(train, sim, cfg, {1}, {}), std::invalid_argument);
  }

  SECTION("the sweep CSV carries one row per grid point") {
    fs::path dir = fresh_dir("sweep");
    write_sweep_csv(grid, (dir / "sweep.csv").string());
    std::vector<std::string> lines = lines_of(slurp(dir / "sweep.csv"));
    REQUIRE(lines.size() == grid.size() + 1);
    CHECK(lines[0] == "theta_prewarm,givenup_multiplier,q3_csr,normalized_memory,total_wmt");
    CHECK(lines[1].rfind("0,1,", 0) == 0);
  }
}
