// Co-occurrence mining: plain and lagged co-occurrence rates, offline link
// mining across app/owner-sharing functions, and the online tracker that
// correlates unseen functions with same-trigger peers during simulation.
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "spes/config.hpp"
#include "spes/types.hpp"

namespace spes {

struct CorrelationLink {
  std::string target_id;
  std::string indicator_id;
  int lag = 0;
  double score = 0.0;

  bool operator==(const CorrelationLink&) const = default;
};

// Fraction of the target's invoked slots where `other` is invoked in the same
// slot. Zero when the target never fires.
inline double cooccurrence_rate(std::span<const Count> target, std::span<const Count> other) {
  if (target.size() != other.size())
    throw std::invalid_argument("cooccurrence_rate: misaligned series");
  std::uint64_t target_slots = 0, both = 0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (target[t] > 0) {
      ++target_slots;
      if (other[t] > 0) ++both;
    }
  }
  return target_slots == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(target_slots);
}

inline double cooccurrence_rate(const InvocationSeries& target, const InvocationSeries& other) {
  return cooccurrence_rate(std::span<const Count>(target.counts),
                           std::span<const Count>(other.counts));
}

// Fraction of the target's invoked slots t where the indicator fired anywhere
// in [t - lag, t] (clamped at the window start). lag = 0 degenerates to the
// plain co-occurrence rate; the rate is non-decreasing in lag.
inline double lagged_cooccurrence_rate(std::span<const Count> target,
                                       std::span<const Count> indicator, int lag) {
  if (target.size() != indicator.size())
    throw std::invalid_argument("lagged_cooccurrence_rate: misaligned series");
  if (lag < 0) throw std::invalid_argument("lagged_cooccurrence_rate: lag must be >= 0");
  std::uint64_t target_slots = 0, hits = 0;
  std::int64_t last_indicator = -1;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (indicator[t] > 0) last_indicator = static_cast<std::int64_t>(t);
    if (target[t] > 0) {
      ++target_slots;
      if (last_indicator >= 0 && static_cast<std::int64_t>(t) - last_indicator <= lag) ++hits;
    }
  }
  return target_slots == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(target_slots);
}

inline double lagged_cooccurrence_rate(const InvocationSeries& target,
                                       const InvocationSeries& indicator, int lag) {
  return lagged_cooccurrence_rate(std::span<const Count>(target.counts),
                                  std::span<const Count>(indicator.counts), lag);
}

// Candidates share the target's app or owner. A candidate becomes a link at the
// smallest lag whose lagged co-occurrence reaches tcor_threshold; the score is
// the rate at that lag. Links come back sorted by indicator id.
inline std::vector<CorrelationLink> mine_offline_links(const std::string& target_id,
                                                       const TraceDataset& ds,
                                                       const RunConfig& cfg) {
  const FunctionMeta* target_meta = ds.find_meta(target_id);
  const InvocationSeries* target = ds.find_series(target_id);
  if (!target_meta || !target)
    throw std::invalid_argument("mine_offline_links: unknown target " + target_id);

  std::vector<CorrelationLink> links;
  if (target->invoked_slot_count() == 0) return links;

  for (std::size_t i = 0; i < ds.size(); ++i) {
    const FunctionMeta& cand = ds.metas[i];
    if (cand.function_id == target_id) continue;
    if (cand.app_id != target_meta->app_id && cand.owner_id != target_meta->owner_id) continue;
    for (int lag = 0; lag <= cfg.tcor_max_lag; ++lag) {
      double score = lagged_cooccurrence_rate(*target, ds.series[i], lag);
      if (score >= cfg.tcor_threshold) {
        links.push_back(CorrelationLink{target_id, cand.function_id, lag, score});
        break;
      }
    }
  }
  std::sort(links.begin(), links.end(),
            [](const CorrelationLink& a, const CorrelationLink& b) {
              return a.indicator_id < b.indicator_id;
            });
  return links;
}

// ---------------------------------------------------------------------------
// Online tracker

// Tracks running co-occurrence between one unseen target and its same-trigger
// candidates. Candidates whose rate falls more than deactivation_gap below the
// best rate stop counting as preload hints until they recover to within
// reactivation_gap.
class OnlineCorrelationTracker {
 public:
  OnlineCorrelationTracker(std::vector<std::uint32_t> candidate_ids, double deactivation_gap,
                           double reactivation_gap)
      : deactivation_gap_(deactivation_gap), reactivation_gap_(reactivation_gap) {
    states_.reserve(candidate_ids.size());
    for (std::uint32_t id : candidate_ids) states_.emplace(id, State{});
  }

  // Feed one slot: the ids invoked this slot (any order) and whether the target
  // itself fired. Returns true when any active candidate fired this slot.
  bool update(std::span<const std::uint32_t> invoked_ids, bool target_invoked) {
    if (target_invoked) {
      ++target_slots_;
      for (std::uint32_t id : invoked_ids) {
        auto it = states_.find(id);
        if (it != states_.end()) ++it->second.co_hits;
      }
      refresh_activity();
    }
    for (std::uint32_t id : invoked_ids) {
      auto it = states_.find(id);
      if (it != states_.end() && it->second.active) return true;
    }
    return false;
  }

  bool is_candidate(std::uint32_t id) const { return states_.count(id) > 0; }
  bool is_active(std::uint32_t id) const {
    auto it = states_.find(id);
    return it != states_.end() && it->second.active;
  }
  double rate(std::uint32_t id) const {
    auto it = states_.find(id);
    if (it == states_.end() || target_slots_ == 0) return 0.0;
    return static_cast<double>(it->second.co_hits) / static_cast<double>(target_slots_);
  }
  double max_rate() const { return max_rate_; }
  std::size_t candidate_count() const { return states_.size(); }

 private:
  struct State {
    std::uint64_t co_hits = 0;
    bool active = true;
  };

  void refresh_activity() {
    max_rate_ = 0.0;
    for (const auto& [id, st] : states_) {
      double r = static_cast<double>(st.co_hits) / static_cast<double>(target_slots_);
      if (r > max_rate_) max_rate_ = r;
    }
    for (auto& [id, st] : states_) {
      double gap = max_rate_ - static_cast<double>(st.co_hits) / static_cast<double>(target_slots_);
      if (st.active) {
        if (gap > deactivation_gap_) st.active = false;
      } else if (gap <= reactivation_gap_) {
        st.active = true;
      }
    }
  }

  std::unordered_map<std::uint32_t, State> states_;
  std::uint64_t target_slots_ = 0;
  double max_rate_ = 0.0;
  double deactivation_gap_;
  double reactivation_gap_;
};

// ---------------------------------------------------------------------------
// Link dump

inline void write_links_csv(const std::vector<CorrelationLink>& links, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_links_csv: cannot open " + path);
  out << "target_id,indicator_id,lag,score\n";
  for (const CorrelationLink& l : links) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, l.score);
    out << l.target_id << ',' << l.indicator_id << ',' << l.lag << ','
        << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
  }
}

inline std::vector<CorrelationLink> load_links_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_links_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("target_id,indicator_id,lag,score", 0) != 0)
    throw std::runtime_error("load_links_csv: " + path + ": unexpected header");
  std::vector<CorrelationLink> links;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    CorrelationLink l;
    std::string lag_s, score_s;
    if (!std::getline(row, l.target_id, ',') || !std::getline(row, l.indicator_id, ',') ||
        !std::getline(row, lag_s, ',') || !std::getline(row, score_s)) {
      std::ostringstream msg;
      msg << "load_links_csv: " << path << ":" << lineno << ": malformed row";
      throw std::runtime_error(msg.str());
    }
    l.lag = std::stoi(lag_s);
    l.score = std::stod(score_s);
    links.push_back(std::move(l));
  }
  return links;
}

}  // namespace spes
