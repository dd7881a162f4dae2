// Core vocabulary: triggers, function metadata, minute-indexed invocation series,
// datasets, and the category/predictive-value types shared by every other header.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace spes {

using Slot = std::int64_t;    // absolute minute index from the start of the dataset
using Count = std::uint32_t;  // invocations observed within one minute

// ---------------------------------------------------------------------------
// Triggers

enum class TriggerType : std::uint8_t {
  Http = 0,
  Timer,
  Queue,
  Storage,
  Event,
  Orchestration,
  Others,
};

inline const char* to_string(TriggerType t) {
  switch (t) {
    case TriggerType::Http: return "http";
    case TriggerType::Timer: return "timer";
    case TriggerType::Queue: return "queue";
    case TriggerType::Storage: return "storage";
    case TriggerType::Event: return "event";
    case TriggerType::Orchestration: return "orchestration";
    case TriggerType::Others: return "others";
  }
  return "others";
}

// Unrecognized labels fold into Others so foreign traces never fail on triggers.
inline TriggerType parse_trigger(std::string_view s) {
  if (s == "http") return TriggerType::Http;
  if (s == "timer") return TriggerType::Timer;
  if (s == "queue") return TriggerType::Queue;
  if (s == "storage") return TriggerType::Storage;
  if (s == "event") return TriggerType::Event;
  if (s == "orchestration") return TriggerType::Orchestration;
  return TriggerType::Others;
}

// ---------------------------------------------------------------------------
// Functions and series

struct FunctionMeta {
  std::string owner_id;
  std::string app_id;
  std::string function_id;
  TriggerType trigger = TriggerType::Others;
};

struct InvocationSeries {
  std::string function_id;
  Slot origin_minute = 0;      // absolute minute of counts[0]
  std::vector<Count> counts;   // one entry per minute

  std::size_t size() const { return counts.size(); }
  bool invoked_at(std::size_t offset) const { return counts[offset] > 0; }

  std::uint64_t invoked_slot_count() const {
    std::uint64_t n = 0;
    for (Count c : counts) n += (c > 0);
    return n;
  }
  std::uint64_t total_invocations() const {
    std::uint64_t n = 0;
    for (Count c : counts) n += c;
    return n;
  }
};

// A dataset holds one meta and one series per function, sorted by function_id.
struct TraceDataset {
  std::vector<FunctionMeta> metas;
  std::vector<InvocationSeries> series;  // parallel to metas
  int days = 0;
  int minutes_per_day = 1440;
  std::unordered_map<std::string, std::size_t> index;  // function_id -> position

  std::size_t size() const { return metas.size(); }
  Slot slots() const { return static_cast<Slot>(days) * minutes_per_day; }

  const InvocationSeries* find_series(const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? nullptr : &series[it->second];
  }
  const FunctionMeta* find_meta(const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? nullptr : &metas[it->second];
  }

  // Establishes the sorted order and the id index; call after filling the vectors.
  void finalize() {
    if (metas.size() != series.size())
      throw std::invalid_argument("TraceDataset: metas and series must be parallel");
    std::vector<std::size_t> order(metas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return metas[a].function_id < metas[b].function_id;
    });
    std::vector<FunctionMeta> m2;
    std::vector<InvocationSeries> s2;
    m2.reserve(metas.size());
    s2.reserve(series.size());
    for (std::size_t i : order) {
      m2.push_back(std::move(metas[i]));
      s2.push_back(std::move(series[i]));
    }
    metas = std::move(m2);
    series = std::move(s2);
    index.clear();
    index.reserve(metas.size());
    for (std::size_t i = 0; i < metas.size(); ++i) {
      if (metas[i].function_id != series[i].function_id)
        throw std::invalid_argument("TraceDataset: meta/series id mismatch");
      if (!index.emplace(metas[i].function_id, i).second)
        throw std::invalid_argument("TraceDataset: duplicate function_id " + metas[i].function_id);
    }
  }
};

// ---------------------------------------------------------------------------
// Categories

enum class FunctionCategory : std::uint8_t {
  AlwaysWarm = 0,
  Regular,
  ApproRegular,
  Dense,
  Successive,
  Pulsed,
  Correlated,
  Possible,
  NewlyPossible,
  Unknown,
};

inline constexpr FunctionCategory kAllCategories[] = {
    FunctionCategory::AlwaysWarm, FunctionCategory::Regular,  FunctionCategory::ApproRegular,
    FunctionCategory::Dense,      FunctionCategory::Successive, FunctionCategory::Pulsed,
    FunctionCategory::Correlated, FunctionCategory::Possible, FunctionCategory::NewlyPossible,
    FunctionCategory::Unknown,
};

inline const char* to_string(FunctionCategory c) {
  switch (c) {
    case FunctionCategory::AlwaysWarm: return "always_warm";
    case FunctionCategory::Regular: return "regular";
    case FunctionCategory::ApproRegular: return "appro_regular";
    case FunctionCategory::Dense: return "dense";
    case FunctionCategory::Successive: return "successive";
    case FunctionCategory::Pulsed: return "pulsed";
    case FunctionCategory::Correlated: return "correlated";
    case FunctionCategory::Possible: return "possible";
    case FunctionCategory::NewlyPossible: return "newly_possible";
    case FunctionCategory::Unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<FunctionCategory> parse_category(std::string_view s) {
  for (FunctionCategory c : kAllCategories)
    if (s == to_string(c)) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Predictive values

// Regular/ApproRegular/Possible carry a discrete set of candidate waiting times;
// Dense carries an inclusive [lo, hi] range. Values are minutes since the last
// invocation, always >= 1.
struct PredictiveValues {
  enum class Kind : std::uint8_t { None = 0, DiscreteSet, Range };
  Kind kind = Kind::None;
  std::vector<int> values;  // DiscreteSet: sorted unique; Range: exactly {lo, hi}

  static PredictiveValues none() { return {}; }
  static PredictiveValues discrete(std::vector<int> vs) {
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return {Kind::DiscreteSet, std::move(vs)};
  }
  static PredictiveValues range(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("PredictiveValues: lo > hi");
    return {Kind::Range, {lo, hi}};
  }

  bool empty() const { return kind == Kind::None || values.empty(); }
  int lo() const { return values.front(); }
  int hi() const { return values.back(); }

  bool operator==(const PredictiveValues&) const = default;
};

inline const char* to_string(PredictiveValues::Kind k) {
  switch (k) {
    case PredictiveValues::Kind::None: return "none";
    case PredictiveValues::Kind::DiscreteSet: return "discrete";
    case PredictiveValues::Kind::Range: return "range";
  }
  return "none";
}

}  // namespace spes
