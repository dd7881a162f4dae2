// Minute-stepped provisioning engine: replays a simulation window under either
// the categorized policy or a fixed keep-alive baseline, tracking memory
// residency with worst-case occupancy (the eviction slot still counts, the
// cold-start slot counts as invoked-and-loaded).
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "spes/classifier.hpp"
#include "spes/config.hpp"
#include "spes/correlation.hpp"
#include "spes/predictor.hpp"
#include "spes/types.hpp"

namespace spes {

// Membership changes during one slot, by function index into the simulation
// dataset. loads and evictions are disjoint; cold_starts is a subset of loads;
// warm_hits are invocations served without a load.
struct SlotDecision {
  Slot slot = 0;
  std::vector<std::uint32_t> loads;
  std::vector<std::uint32_t> evictions;
  std::vector<std::uint32_t> cold_starts;
  std::vector<std::uint32_t> warm_hits;
};

struct SimulationResult {
  std::vector<FunctionProfile> profiles;            // dataset order
  std::vector<std::uint64_t> loaded_minutes;        // per function, worst-case occupancy
  std::vector<std::uint64_t> occupied_per_slot;     // loaded at slot end plus evicted during it
  std::vector<std::uint64_t> invoked_loaded_per_slot;
  std::vector<SlotDecision> decisions;              // filled only when recording is on
};

namespace detail {

struct EngineLink {
  std::uint32_t indicator = 0;
  int lag = 0;
};

// Shared per-run state for both policies.
struct EngineState {
  const TraceDataset* ds = nullptr;
  std::size_t n = 0;
  Slot slots = 0;

  std::vector<std::uint8_t> in_mem;
  std::vector<Slot> mem_since;       // interval start while loaded
  std::vector<Slot> last_invoked_prev;  // last invoked slot strictly before the current one
  std::vector<std::uint8_t> active;
  std::vector<std::uint8_t> invoked_now;
  std::uint64_t evicted_this_slot = 0;

  SimulationResult result;
  bool record = false;

  explicit EngineState(const TraceDataset& dataset, bool record_decisions)
      : ds(&dataset),
        n(dataset.size()),
        slots(dataset.slots()),
        in_mem(dataset.size(), 0),
        mem_since(dataset.size(), 0),
        last_invoked_prev(dataset.size(), -1),
        active(dataset.size(), 0),
        invoked_now(dataset.size(), 0),
        record(record_decisions) {
    result.loaded_minutes.assign(n, 0);
    result.occupied_per_slot.assign(static_cast<std::size_t>(slots), 0);
    result.invoked_loaded_per_slot.assign(static_cast<std::size_t>(slots), 0);
    if (record) result.decisions.resize(static_cast<std::size_t>(slots));
  }

  void load(std::uint32_t i, Slot t, SlotDecision* dec, bool cold) {
    in_mem[i] = 1;
    mem_since[i] = t;
    if (dec) {
      dec->loads.push_back(i);
      if (cold) dec->cold_starts.push_back(i);
    }
  }

  void evict(std::uint32_t i, Slot t, SlotDecision* dec) {
    in_mem[i] = 0;
    result.loaded_minutes[i] += static_cast<std::uint64_t>(t - mem_since[i] + 1);
    ++evicted_this_slot;
    if (dec) dec->evictions.push_back(i);
  }

  // Worst-case occupancy: everything loaded at slot end plus everything evicted
  // during the slot.
  void close_slot(Slot t, std::uint64_t invoked_count) {
    std::uint64_t mem_count = 0;
    for (std::size_t i = 0; i < n; ++i) mem_count += in_mem[i];
    result.occupied_per_slot[static_cast<std::size_t>(t)] = mem_count + evicted_this_slot;
    result.invoked_loaded_per_slot[static_cast<std::size_t>(t)] = invoked_count;
    evicted_this_slot = 0;
  }

  void close_intervals() {
    for (std::size_t i = 0; i < n; ++i)
      if (in_mem[i]) result.loaded_minutes[i] += static_cast<std::uint64_t>(slots - mem_since[i]);
  }
};

}  // namespace detail

// Replays the simulation window under the categorized policy. Functions present
// in the categorization start active with their trained profile; functions that
// only appear in the simulation window start unknown and inactive, activating
// at their first invocation (at which point their online tracker snapshots the
// currently active same-trigger functions as candidates). Everything runs in
// function-index order, so results do not depend on the worker count.
inline SimulationResult run_spes(const TraceDataset& sim_ds, const CategorizationMap& cats,
                                 const RunConfig& cfg, bool record_decisions = false) {
  detail::EngineState st(sim_ds, record_decisions);
  const std::size_t n = st.n;

  std::unordered_map<std::string, const CategorizedFunction*> by_id;
  by_id.reserve(cats.size());
  for (const CategorizedFunction& c : cats) by_id[c.function_id] = &c;

  std::vector<FunctionProfile>& profiles = st.result.profiles;
  profiles.resize(n);
  std::vector<std::vector<detail::EngineLink>> links(n);
  std::vector<std::unique_ptr<OnlineCorrelationTracker>> trackers(n);
  std::vector<std::uint8_t> trained(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    FunctionProfile& p = profiles[i];
    p.function_id = sim_ds.series[i].function_id;
    auto it = by_id.find(p.function_id);
    if (it != by_id.end()) {
      const CategorizedFunction& c = *it->second;
      p.category = c.category;
      p.predictive = c.predictive;
      p.links = c.links;
      p.offline_stats = c.offline_stats;
      trained[i] = 1;
      for (const CorrelationLink& l : c.links) {
        auto pos = sim_ds.index.find(l.indicator_id);
        if (pos != sim_ds.index.end())
          links[i].push_back({static_cast<std::uint32_t>(pos->second), l.lag});
      }
    }
    p.theta_givenup = cfg.theta_givenup_for(p.category);
    st.active[i] = trained[i];
  }

  // Same-trigger registry of active functions, in index order.
  std::vector<std::vector<std::uint32_t>> by_trigger(7);
  auto trigger_of = [&](std::size_t i) {
    return static_cast<std::size_t>(sim_ds.metas[i].trigger);
  };
  for (std::size_t i = 0; i < n; ++i)
    if (st.active[i]) by_trigger[trigger_of(i)].push_back(static_cast<std::uint32_t>(i));

  // Online trackers exist only for functions the training window never saw;
  // they snapshot the same-trigger active set as candidates when activating.
  auto make_tracker = [&](std::size_t i) {
    std::vector<std::uint32_t> cands;
    for (std::uint32_t c : by_trigger[trigger_of(i)])
      if (c != static_cast<std::uint32_t>(i)) cands.push_back(c);
    trackers[i] = std::make_unique<OnlineCorrelationTracker>(std::move(cands),
                                                             cfg.deactivation_gap,
                                                             cfg.reactivation_gap);
  };

  std::vector<std::uint32_t> invoked_ids;
  std::vector<std::uint32_t> batch;
  std::vector<std::uint8_t> tracker_hint(n, 0);

  SlotDecision* dec = nullptr;
  if (record_decisions && cfg.carry_warm) dec = &st.result.decisions[0];
  if (cfg.carry_warm) {
    for (std::size_t i = 0; i < n; ++i)
      if (profiles[i].category == FunctionCategory::AlwaysWarm)
        st.load(static_cast<std::uint32_t>(i), 0, dec, false);
  }

  for (Slot t = 0; t < st.slots; ++t) {
    dec = record_decisions ? &st.result.decisions[static_cast<std::size_t>(t)] : nullptr;
    if (dec) dec->slot = t;

    invoked_ids.clear();
    batch.clear();
    for (std::size_t i = 0; i < n; ++i) {
      bool inv = sim_ds.series[i].counts[static_cast<std::size_t>(t)] > 0;
      st.invoked_now[i] = inv;
      if (inv) {
        invoked_ids.push_back(static_cast<std::uint32_t>(i));
        if (!st.active[i]) batch.push_back(static_cast<std::uint32_t>(i));
      }
    }

    // Newly seen functions activate together; their candidate snapshots exclude
    // the rest of the batch, then all of them register.
    if (!batch.empty()) {
      if (!cfg.disable_online_corr)
        for (std::uint32_t i : batch) make_tracker(i);
      for (std::uint32_t i : batch) {
        st.active[i] = 1;
        by_trigger[trigger_of(i)].push_back(i);
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      tracker_hint[i] = 0;
      if (trackers[i] && st.active[i])
        tracker_hint[i] = trackers[i]->update(invoked_ids, st.invoked_now[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!st.active[i]) continue;
      FunctionProfile& p = profiles[i];
      std::uint32_t idx = static_cast<std::uint32_t>(i);
      if (st.invoked_now[i]) {
        bool cold = !st.in_mem[i];
        if (cold) {
          ++p.cold_starts;
          st.load(idx, t, dec, true);
        } else if (dec) {
          dec->warm_hits.push_back(idx);
        }
        ++p.invoked_slots;
        p.invocation_count += sim_ds.series[i].counts[static_cast<std::size_t>(t)];
        on_invoked(p, t, cfg);
        continue;
      }
      ++p.current_wt;
      if (p.category == FunctionCategory::AlwaysWarm) continue;
      bool flag = false;
      if (p.category == FunctionCategory::Correlated) {
        for (const detail::EngineLink& l : links[i]) {
          if (st.invoked_now[l.indicator] ||
              (st.last_invoked_prev[l.indicator] >= 0 &&
               t - st.last_invoked_prev[l.indicator] <= l.lag)) {
            flag = true;
            break;
          }
        }
      } else if (p.category == FunctionCategory::Unknown && trackers[i]) {
        flag = tracker_hint[i] != 0;
      } else {
        flag = should_preload(p, t, cfg.theta_prewarm, cfg.possible_range_limit);
      }
      if (!flag && p.current_wt >= p.theta_givenup) {
        if (st.in_mem[i]) st.evict(idx, t, dec);
      } else if (flag && !st.in_mem[i]) {
        st.load(idx, t, dec, false);
      }
    }

    st.close_slot(t, invoked_ids.size());
    for (std::uint32_t i : invoked_ids) st.last_invoked_prev[i] = t;
  }

  st.close_intervals();
  return st.result;
}

// Fixed keep-alive baseline: every function stays loaded for exactly
// keepalive_minutes idle minutes after its last invocation (the eviction slot
// included in occupancy), with no categories, preloading, or adjusting.
inline SimulationResult run_keepalive(const TraceDataset& sim_ds, int keepalive_minutes,
                                      bool record_decisions = false) {
  if (keepalive_minutes < 1)
    throw std::invalid_argument("run_keepalive: keepalive_minutes must be >= 1");
  detail::EngineState st(sim_ds, record_decisions);
  const std::size_t n = st.n;
  st.result.profiles.resize(n);
  std::vector<int> idle(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    st.result.profiles[i].function_id = sim_ds.series[i].function_id;
    st.result.profiles[i].theta_givenup = keepalive_minutes;
  }

  for (Slot t = 0; t < st.slots; ++t) {
    SlotDecision* dec = record_decisions ? &st.result.decisions[static_cast<std::size_t>(t)] : nullptr;
    if (dec) dec->slot = t;
    std::uint64_t invoked_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      FunctionProfile& p = st.result.profiles[i];
      std::uint32_t idx = static_cast<std::uint32_t>(i);
      Count c = sim_ds.series[i].counts[static_cast<std::size_t>(t)];
      if (c > 0) {
        ++invoked_count;
        if (!st.in_mem[i]) {
          ++p.cold_starts;
          st.load(idx, t, dec, true);
        } else if (dec) {
          dec->warm_hits.push_back(idx);
        }
        ++p.invoked_slots;
        p.invocation_count += c;
        p.last_invoked = t;
        idle[i] = 0;
      } else {
        ++idle[i];
        if (st.in_mem[i] && idle[i] >= keepalive_minutes) st.evict(idx, t, dec);
      }
    }
    st.close_slot(t, invoked_count);
  }

  st.close_intervals();
  return st.result;
}

inline SimulationResult run_policy(const TraceDataset& sim_ds, const CategorizationMap& cats,
                                   const RunConfig& cfg, bool record_decisions = false) {
  if (cfg.policy == "keepalive")
    return run_keepalive(sim_ds, cfg.keepalive_minutes, record_decisions);
  if (cfg.policy == "spes") return run_spes(sim_ds, cats, cfg, record_decisions);
  throw std::invalid_argument("run_policy: unknown policy " + cfg.policy);
}

// One event row per membership change or invocation:
// slot,function_id,event with event in {cold_start, warm_hit, preload, evict}.
inline void write_decisions_csv(const std::vector<SlotDecision>& decisions,
                                const TraceDataset& sim_ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_decisions_csv: cannot open " + path);
  out << "slot,function_id,event\n";
  auto id_of = [&](std::uint32_t i) -> const std::string& {
    return sim_ds.series[i].function_id;
  };
  for (const SlotDecision& d : decisions) {
    for (std::uint32_t i : d.cold_starts) out << d.slot << ',' << id_of(i) << ",cold_start\n";
    for (std::uint32_t i : d.warm_hits) out << d.slot << ',' << id_of(i) << ",warm_hit\n";
    for (std::uint32_t i : d.loads) {
      if (!std::binary_search(d.cold_starts.begin(), d.cold_starts.end(), i))
        out << d.slot << ',' << id_of(i) << ",preload\n";
    }
    for (std::uint32_t i : d.evictions) out << d.slot << ',' << id_of(i) << ",evict\n";
  }
}

}  // namespace spes
