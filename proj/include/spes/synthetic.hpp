// Seed-deterministic synthetic trace generation. Each descriptor produces
// functions whose invocation texture lands in a known category, and the
// generator returns those intended labels (plus planted leader/follower pairs)
// so recovery tests can grade the classifier.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "spes/types.hpp"

namespace spes {

struct SyntheticGroup {
  std::string kind;  // always_active | periodic | multi_modal | multi_gap | dense | bursty |
                     // chained | sparse_random
  int count = 1;

  // periodic
  int period = 60;
  int jitter = 0;

  // multi_modal
  std::vector<int> periods;
  std::vector<double> weights;

  // Idle gap bounds for dense, bursty and chained leaders; -1 picks the kind
  // default (dense 1..4, bursty 50..200, chained 20..600).
  int gap_min = -1;
  int gap_max = -1;

  // bursty
  int burst_min = 3;
  int burst_max = 8;
  int count_min = 1;
  int count_max = 3;

  // chained
  int lag = 2;
  std::string leader_id;  // optional: chain onto an existing function

  // sparse_random
  double rate = 0.002;
};

struct SyntheticSpec {
  int days = 14;
  int minutes_per_day = 1440;
  std::uint64_t seed = 42;
  std::vector<SyntheticGroup> groups;
};

struct ChainedPair {
  std::string leader_id;
  std::string follower_id;
  int lag = 0;
};

struct SyntheticResult {
  TraceDataset dataset;
  std::map<std::string, FunctionCategory> labels;  // intended category per function
  std::vector<ChainedPair> chains;
};

namespace detail {

// Stable per-function stream: mixes the spec seed with the function index.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return std::mt19937_64(z ^ (z >> 31));
}

inline int draw_int(std::mt19937_64& rng, int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("synthetic: empty integer range");
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline std::string padded_id(std::size_t index, const char* tag) {
  std::ostringstream s;
  s << 'f';
  std::string n = std::to_string(index);
  for (std::size_t i = n.size(); i < 5; ++i) s << '0';
  s << n << '-' << tag;
  return s.str();
}

}  // namespace detail

inline SyntheticSpec parse_synthetic_spec(const nlohmann::json& j) {
  SyntheticSpec spec;
  if (!j.is_object()) throw std::invalid_argument("synthetic spec: top level must be an object");
  if (j.contains("days")) spec.days = j.at("days").get<int>();
  if (j.contains("minutes_per_day")) spec.minutes_per_day = j.at("minutes_per_day").get<int>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (!j.contains("functions") || !j.at("functions").is_array())
    throw std::invalid_argument("synthetic spec: missing 'functions' array");
  for (const nlohmann::json& g : j.at("functions")) {
    SyntheticGroup group;
    group.kind = g.at("kind").get<std::string>();
    if (g.contains("count")) group.count = g.at("count").get<int>();
    if (g.contains("period")) group.period = g.at("period").get<int>();
    if (g.contains("jitter")) group.jitter = g.at("jitter").get<int>();
    if (g.contains("periods")) group.periods = g.at("periods").get<std::vector<int>>();
    if (g.contains("weights")) group.weights = g.at("weights").get<std::vector<double>>();
    if (g.contains("gap_min")) group.gap_min = g.at("gap_min").get<int>();
    if (g.contains("gap_max")) group.gap_max = g.at("gap_max").get<int>();
    if (g.contains("burst_min")) group.burst_min = g.at("burst_min").get<int>();
    if (g.contains("burst_max")) group.burst_max = g.at("burst_max").get<int>();
    if (g.contains("count_min")) group.count_min = g.at("count_min").get<int>();
    if (g.contains("count_max")) group.count_max = g.at("count_max").get<int>();
    if (g.contains("lag")) group.lag = g.at("lag").get<int>();
    if (g.contains("leader_id")) group.leader_id = g.at("leader_id").get<std::string>();
    if (g.contains("rate")) group.rate = g.at("rate").get<double>();
    spec.groups.push_back(std::move(group));
  }
  return spec;
}

inline SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  if (spec.days < 1 || spec.minutes_per_day < 1)
    throw std::invalid_argument("synthetic: window must span at least one slot");
  const std::size_t slots = static_cast<std::size_t>(spec.days) * spec.minutes_per_day;

  SyntheticResult result;
  TraceDataset& ds = result.dataset;
  ds.days = spec.days;
  ds.minutes_per_day = spec.minutes_per_day;

  std::size_t next_index = 0;
  auto add_function = [&](const char* tag, TriggerType trigger, FunctionCategory label,
                          std::vector<Count> counts, const std::string& owner,
                          const std::string& app) -> std::string {
    std::string id = detail::padded_id(next_index, tag);
    ds.metas.push_back(FunctionMeta{owner.empty() ? "own-" + id : owner,
                                    app.empty() ? "app-" + id : app, id, trigger});
    ds.series.push_back(InvocationSeries{id, 0, std::move(counts)});
    result.labels.emplace(id, label);
    ++next_index;
    return id;
  };

  for (const SyntheticGroup& group : spec.groups) {
    SyntheticGroup g = group;
    if (g.gap_min < 0 || g.gap_max < 0) {
      if (g.kind == "bursty") {
        g.gap_min = 50;
        g.gap_max = 200;
      } else if (g.kind == "chained") {
        // Wide enough that leader waiting times rarely repeat, keeping the
        // leaders on the keep-alive strategy.
        g.gap_min = 20;
        g.gap_max = 600;
      } else {
        g.gap_min = 1;
        g.gap_max = 4;
      }
    }
    if (g.count < 1) throw std::invalid_argument("synthetic: group count must be >= 1");
    for (int k = 0; k < g.count; ++k) {
      auto rng = detail::make_rng(spec.seed, next_index);
      std::vector<Count> counts(slots, 0);

      if (g.kind == "always_active") {
        for (std::size_t t = 0; t < slots; ++t)
          counts[t] = static_cast<Count>(detail::draw_int(rng, 1, 3));
        add_function("aw", TriggerType::Timer, FunctionCategory::AlwaysWarm, std::move(counts), "",
                     "");

      } else if (g.kind == "periodic") {
        if (g.period < 2) throw std::invalid_argument("synthetic: periodic needs period >= 2");
        if (g.jitter < 0 || g.jitter >= g.period)
          throw std::invalid_argument("synthetic: periodic jitter must be in [0, period)");
        // jitter > 0 wobbles each gap to one of {period-j, period, period+j},
        // which concentrates the waiting times on three values.
        std::size_t t = static_cast<std::size_t>(detail::draw_int(rng, 0, g.period - 1));
        while (t < slots) {
          counts[t] = 1;
          int gap = g.period;
          if (g.jitter > 0) gap += (detail::draw_int(rng, 0, 2) - 1) * g.jitter;
          t += static_cast<std::size_t>(gap);
        }
        add_function("per", TriggerType::Timer,
                     g.jitter > 0 ? FunctionCategory::ApproRegular : FunctionCategory::Regular,
                     std::move(counts), "", "");

      } else if (g.kind == "multi_gap") {
        // Gaps rotate through a fixed palette of at least five distinct values
        // (random starting phase only): every waiting time recurs, but no three
        // dominate, so the backstop strategy is the only fit.
        if (g.periods.size() < 5)
          throw std::invalid_argument("synthetic: multi_gap needs at least 5 gap values");
        for (int gap : g.periods)
          if (gap < 2) throw std::invalid_argument("synthetic: multi_gap gaps must be >= 2");
        std::size_t t = static_cast<std::size_t>(detail::draw_int(rng, 0, g.periods.front() - 1));
        std::size_t cursor = static_cast<std::size_t>(
            detail::draw_int(rng, 0, static_cast<int>(g.periods.size()) - 1));
        while (t < slots) {
          counts[t] = 1;
          t += static_cast<std::size_t>(g.periods[cursor]);
          cursor = (cursor + 1) % g.periods.size();
        }
        add_function("mg", TriggerType::Http, FunctionCategory::Possible, std::move(counts), "",
                     "");

      } else if (g.kind == "multi_modal") {
        if (g.periods.size() < 2 || g.periods.size() != g.weights.size())
          throw std::invalid_argument("synthetic: multi_modal needs matching periods/weights (>= 2)");
        double total = 0.0;
        for (double w : g.weights) total += w;
        if (total <= 0.0) throw std::invalid_argument("synthetic: multi_modal weights must sum > 0");
        std::size_t t = static_cast<std::size_t>(detail::draw_int(rng, 0, g.periods.front() - 1));
        while (t < slots) {
          counts[t] = static_cast<Count>(detail::draw_int(rng, 1, 2));
          double pick = (static_cast<double>(rng() >> 11) / 9007199254740992.0) * total;
          int gap = g.periods.back();
          for (std::size_t i = 0; i < g.periods.size(); ++i) {
            if (pick < g.weights[i]) {
              gap = g.periods[i];
              break;
            }
            pick -= g.weights[i];
          }
          if (gap < 2) throw std::invalid_argument("synthetic: multi_modal periods must be >= 2");
          t += static_cast<std::size_t>(gap);
        }
        add_function("mm", TriggerType::Timer, FunctionCategory::ApproRegular, std::move(counts),
                     "", "");

      } else if (g.kind == "dense") {
        if (g.gap_min < 1 || g.gap_max < g.gap_min)
          throw std::invalid_argument("synthetic: dense needs 1 <= gap_min <= gap_max");
        std::size_t t = static_cast<std::size_t>(detail::draw_int(rng, 0, g.gap_max));
        while (t < slots) {
          int active = detail::draw_int(rng, 1, 2);
          for (int a = 0; a < active && t < slots; ++a, ++t)
            counts[t] = static_cast<Count>(detail::draw_int(rng, 1, 3));
          t += static_cast<std::size_t>(detail::draw_int(rng, g.gap_min, g.gap_max));
        }
        add_function("den", TriggerType::Queue, FunctionCategory::Dense, std::move(counts), "", "");

      } else if (g.kind == "bursty") {
        if (g.burst_min < 1 || g.burst_max < g.burst_min)
          throw std::invalid_argument("synthetic: bursty needs 1 <= burst_min <= burst_max");
        std::size_t t = static_cast<std::size_t>(detail::draw_int(rng, 0, g.gap_max));
        while (t < slots) {
          int len = detail::draw_int(rng, g.burst_min, g.burst_max);
          for (int a = 0; a < len && t < slots; ++a, ++t)
            counts[t] = static_cast<Count>(detail::draw_int(rng, g.count_min, g.count_max));
          t += static_cast<std::size_t>(detail::draw_int(rng, g.gap_min, g.gap_max));
        }
        add_function("bur", TriggerType::Http, FunctionCategory::Successive, std::move(counts), "",
                     "");

      } else if (g.kind == "chained") {
        if (g.lag < 1) throw std::invalid_argument("synthetic: chained needs lag >= 1");
        std::vector<std::size_t> leader_slots;
        std::string leader_id = g.leader_id;
        std::string owner, app;
        if (leader_id.empty()) {
          // Generate a sparse irregular leader and give the pair a shared app.
          // Gaps are drawn without repetition: a repeated waiting time would
          // give the leader a recurring-value strategy to fall back on, and we
          // want these to stay on plain keep-alive.
          const std::size_t distinct = static_cast<std::size_t>(g.gap_max - g.gap_min) + 1;
          std::unordered_set<int> used_gaps;
          std::size_t t = static_cast<std::size_t>(detail::draw_int(rng, 0, g.gap_max));
          while (t < slots) {
            leader_slots.push_back(t);
            int gap = detail::draw_int(rng, g.gap_min, g.gap_max);
            if (used_gaps.size() < distinct)
              while (!used_gaps.insert(gap).second) gap = detail::draw_int(rng, g.gap_min, g.gap_max);
            t += static_cast<std::size_t>(gap);
          }
          std::vector<Count> lead_counts(slots, 0);
          for (std::size_t s : leader_slots) lead_counts[s] = 1;
          owner = "own-" + detail::padded_id(next_index, "led");
          app = "app-" + detail::padded_id(next_index, "led");
          leader_id = add_function("led", TriggerType::Storage, FunctionCategory::Pulsed,
                                   std::move(lead_counts), owner, app);
        } else {
          bool found = false;
          for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.metas[i].function_id == leader_id) {
              owner = ds.metas[i].owner_id;
              app = ds.metas[i].app_id;
              for (std::size_t s = 0; s < ds.series[i].counts.size(); ++s)
                if (ds.series[i].counts[s] > 0) leader_slots.push_back(s);
              found = true;
              break;
            }
          }
          if (!found)
            throw std::invalid_argument("synthetic: chained leader_id not found: " + leader_id);
        }
        std::vector<Count> follow_counts(slots, 0);
        for (std::size_t s : leader_slots) {
          std::size_t at = s + static_cast<std::size_t>(g.lag);
          if (at < slots) follow_counts[at] = 1;
        }
        std::string follower_id = add_function("fol", TriggerType::Storage,
                                               FunctionCategory::Correlated,
                                               std::move(follow_counts), owner, app);
        result.chains.push_back(ChainedPair{leader_id, follower_id, g.lag});

      } else if (g.kind == "sparse_random") {
        if (g.rate <= 0.0 || g.rate >= 1.0)
          throw std::invalid_argument("synthetic: sparse_random rate must be in (0,1)");
        // At the low rates this kind is meant for, the waiting times rarely
        // repeat, so these functions end up on the plain keep-alive strategy.
        for (std::size_t t = 0; t < slots; ++t) {
          double u = static_cast<double>(rng() >> 11) / 9007199254740992.0;
          if (u < g.rate) counts[t] = 1;
        }
        add_function("spr", TriggerType::Http, FunctionCategory::Pulsed, std::move(counts), "",
                     "");

      } else {
        throw std::invalid_argument("synthetic: unknown kind '" + g.kind + "'");
      }
    }
  }

  ds.finalize();
  return result;
}

inline SyntheticResult generate_synthetic(const nlohmann::json& spec_json) {
  return generate_synthetic(parse_synthetic_spec(spec_json));
}

}  // namespace spes
