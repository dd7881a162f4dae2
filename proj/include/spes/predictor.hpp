// Per-function runtime profile: predictive-value bookkeeping, next-invocation
// windows, and the online adjusting pass (record waiting times, drift-correct
// predictive values, recategorize unknowns once enough samples accrue).
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spes/config.hpp"
#include "spes/correlation.hpp"
#include "spes/timing.hpp"
#include "spes/types.hpp"

namespace spes {

struct OfflineWtStats {
  int median = 0;
  double stddev = 0.0;
  std::vector<int> modes;  // top-mode values, sorted ascending

  static OfflineWtStats from_wts(const std::vector<int>& wts, int n_modes) {
    OfflineWtStats s;
    if (wts.empty()) return s;
    s.median = median_nearest_rank(wts);
    s.stddev = population_stddev(wts);
    for (auto [value, count] : top_modes(wts, n_modes)) s.modes.push_back(value);
    std::sort(s.modes.begin(), s.modes.end());
    return s;
  }
};

struct FunctionProfile {
  std::string function_id;
  FunctionCategory category = FunctionCategory::Unknown;
  PredictiveValues predictive;
  std::vector<CorrelationLink> links;  // correlated profiles only
  OfflineWtStats offline_stats;
  int theta_givenup = 1;

  std::optional<Slot> last_invoked;
  int current_wt = 0;
  std::vector<int> online_wts;

  // Accounting
  std::uint64_t invoked_slots = 0;
  std::uint64_t invocation_count = 0;
  std::uint64_t cold_starts = 0;
};

// ---------------------------------------------------------------------------
// Prediction

namespace detail {

// Possible predictive sets widen to a filled range when their spread is small.
inline bool possible_as_range(const PredictiveValues& p, int possible_range_limit) {
  return p.hi() - p.lo() <= possible_range_limit;
}

inline bool window_hits_discrete(const std::vector<int>& values, Slot last, Slot t, int theta) {
  for (int v : values) {
    Slot predicted = last + v;
    if (predicted >= t - theta && predicted <= t + theta) return true;
  }
  return false;
}

inline bool window_hits_range(int lo, int hi, Slot last, Slot t, int theta) {
  return t >= last + lo - theta && t <= last + hi + theta;
}

}  // namespace detail

// The concrete future slots the profile expects to fire at, anchored on the
// last invocation. Range-valued (and narrow possible) predictions enumerate
// every slot in the filled interval.
inline std::vector<Slot> predicted_invocation_times(const FunctionProfile& p,
                                                    int possible_range_limit) {
  std::vector<Slot> times;
  if (!p.last_invoked || p.predictive.empty()) return times;
  Slot last = *p.last_invoked;
  bool filled = p.predictive.kind == PredictiveValues::Kind::Range;
  if ((p.category == FunctionCategory::Possible || p.category == FunctionCategory::NewlyPossible) &&
      p.predictive.kind == PredictiveValues::Kind::DiscreteSet &&
      detail::possible_as_range(p.predictive, possible_range_limit))
    filled = true;
  if (filled) {
    for (int v = p.predictive.lo(); v <= p.predictive.hi(); ++v) times.push_back(last + v);
  } else {
    for (int v : p.predictive.values) times.push_back(last + v);
  }
  return times;
}

// True when some predicted invocation time lands within theta_prewarm minutes
// of t (both sides inclusive). Categories without predictive values — unknown,
// always-warm, successive, pulsed — never preload this way, and correlated
// profiles take their hint from links instead.
inline bool should_preload(const FunctionProfile& p, Slot t, int theta_prewarm,
                           int possible_range_limit) {
  switch (p.category) {
    case FunctionCategory::Unknown:
    case FunctionCategory::AlwaysWarm:
    case FunctionCategory::Successive:
    case FunctionCategory::Pulsed:
    case FunctionCategory::Correlated:
      return false;
    default:
      break;
  }
  if (!p.last_invoked || p.predictive.empty()) return false;
  Slot last = *p.last_invoked;
  switch (p.predictive.kind) {
    case PredictiveValues::Kind::Range:
      return detail::window_hits_range(p.predictive.lo(), p.predictive.hi(), last, t,
                                       theta_prewarm);
    case PredictiveValues::Kind::DiscreteSet:
      if ((p.category == FunctionCategory::Possible ||
           p.category == FunctionCategory::NewlyPossible) &&
          detail::possible_as_range(p.predictive, possible_range_limit))
        return detail::window_hits_range(p.predictive.lo(), p.predictive.hi(), last, t,
                                         theta_prewarm);
      return detail::window_hits_discrete(p.predictive.values, last, t, theta_prewarm);
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Online adjusting

namespace detail {

inline int round_half_up_mean(int a, int b) {
  long long sum = static_cast<long long>(a) + b;
  return static_cast<int>(std::floor(sum / 2.0 + 0.5));
}

// WT values that occur more than once, ascending.
inline std::vector<int> duplicated_values(const std::vector<int>& wts) {
  std::map<int, int> freq;
  for (int v : wts) ++freq[v];
  std::vector<int> out;
  for (auto [value, count] : freq)
    if (count > 1) out.push_back(value);
  return out;
}

}  // namespace detail

// Drift-corrects predictive values against the online waiting times and
// recategorizes unknown profiles once they expose a recognizable pattern.
// Gate: at least cfg.min_online_wts online samples.
inline void adjust(FunctionProfile& p, const RunConfig& cfg) {
  if (p.online_wts.size() < static_cast<std::size_t>(cfg.min_online_wts)) return;

  switch (p.category) {
    case FunctionCategory::Regular: {
      int online_median = median_nearest_rank(p.online_wts);
      int current = p.predictive.values.empty() ? 0 : p.predictive.values.front();
      if (std::abs(online_median - current) > p.offline_stats.stddev)
        p.predictive = PredictiveValues::discrete({detail::round_half_up_mean(current, online_median)});
      break;
    }
    case FunctionCategory::ApproRegular: {
      std::vector<int> online_modes;
      for (auto [value, count] : top_modes(p.online_wts, cfg.n_modes)) online_modes.push_back(value);
      std::sort(online_modes.begin(), online_modes.end());
      std::vector<int> updated = p.predictive.values;  // sorted ascending
      bool changed = false;
      for (std::size_t i = 0; i < updated.size() && i < online_modes.size(); ++i) {
        if (std::abs(online_modes[i] - updated[i]) > p.offline_stats.stddev) {
          updated[i] = detail::round_half_up_mean(updated[i], online_modes[i]);
          changed = true;
        }
      }
      if (changed) p.predictive = PredictiveValues::discrete(std::move(updated));
      break;
    }
    case FunctionCategory::Dense: {
      std::vector<int> online_modes;
      for (auto [value, count] : top_modes(p.online_wts, cfg.k_modes)) online_modes.push_back(value);
      if (online_modes.empty() || p.predictive.kind != PredictiveValues::Kind::Range) break;
      int online_lo = *std::min_element(online_modes.begin(), online_modes.end());
      int online_hi = *std::max_element(online_modes.begin(), online_modes.end());
      int lo = p.predictive.lo(), hi = p.predictive.hi();
      if (std::abs(online_lo - lo) > p.offline_stats.stddev)
        lo = detail::round_half_up_mean(lo, online_lo);
      if (std::abs(online_hi - hi) > p.offline_stats.stddev)
        hi = detail::round_half_up_mean(hi, online_hi);
      if (lo > hi) std::swap(lo, hi);
      p.predictive = PredictiveValues::range(lo, hi);
      break;
    }
    case FunctionCategory::Possible:
    case FunctionCategory::NewlyPossible: {
      std::vector<int> merged = p.predictive.values;
      for (int v : detail::duplicated_values(p.online_wts)) merged.push_back(v);
      p.predictive = PredictiveValues::discrete(std::move(merged));
      break;
    }
    case FunctionCategory::Unknown: {
      // Recategorize once the online waiting times satisfy a pattern check.
      // One-way: after this the profile is no longer unknown.
      const std::vector<int>& wts = p.online_wts;
      auto p95 = percentile_nearest_rank(wts, 95.0);
      auto p5 = percentile_nearest_rank(wts, 5.0);
      if (p95 - p5 <= 1 || coeff_of_variation(wts) <= cfg.cv_limit) {
        p.category = FunctionCategory::Regular;
        p.predictive = PredictiveValues::discrete({median_nearest_rank(wts)});
      } else if (top_modes_coverage(wts, cfg.n_modes) >=
                 cfg.appro_coverage * static_cast<double>(wts.size())) {
        p.category = FunctionCategory::ApproRegular;
        std::vector<int> modes;
        for (auto [value, count] : top_modes(wts, cfg.n_modes)) modes.push_back(value);
        p.predictive = PredictiveValues::discrete(std::move(modes));
      } else if (percentile_nearest_rank(wts, 90.0) <= cfg.dense_constant) {
        std::vector<int> modes;
        for (auto [value, count] : top_modes(wts, cfg.k_modes)) modes.push_back(value);
        p.category = FunctionCategory::Dense;
        p.predictive = PredictiveValues::range(
            *std::min_element(modes.begin(), modes.end()),
            *std::max_element(modes.begin(), modes.end()));
      } else if (auto dups = detail::duplicated_values(wts); !dups.empty()) {
        p.category = FunctionCategory::NewlyPossible;
        p.predictive = PredictiveValues::discrete(std::move(dups));
      }
      if (p.category != FunctionCategory::Unknown) {
        p.offline_stats = OfflineWtStats::from_wts(wts, cfg.n_modes);
        p.theta_givenup = cfg.theta_givenup_for(p.category);
      }
      break;
    }
    default:
      break;  // always-warm, successive, pulsed, correlated carry no predictive values
  }
}

// Invocation bookkeeping for slot t: closes the current waiting time (only when
// a previous invocation exists — boundary idle is not a waiting time), then
// runs the adjusting pass unless disabled.
inline void on_invoked(FunctionProfile& p, Slot t, const RunConfig& cfg) {
  if (p.last_invoked && p.current_wt > 0) p.online_wts.push_back(p.current_wt);
  p.last_invoked = t;
  p.current_wt = 0;
  if (!cfg.disable_adjusting) adjust(p, cfg);
}

}  // namespace spes
