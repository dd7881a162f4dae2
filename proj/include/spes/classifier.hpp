// Training-time categorization: the deterministic pattern checks in priority
// order, suffix-window retries for drifting functions, the strategy duel for
// indeterminate functions, and the whole-dataset two-phase driver plus the
// categorization CSV round-trip.
#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spes/config.hpp"
#include "spes/correlation.hpp"
#include "spes/predictor.hpp"
#include "spes/timing.hpp"
#include "spes/trace_store.hpp"
#include "spes/types.hpp"

namespace spes {

struct DeterministicResult {
  FunctionCategory category;
  PredictiveValues predictive;
};

struct ForgettingResult {
  FunctionCategory category;
  PredictiveValues predictive;
  int start_day = 1;  // 1-based first day of the suffix window that passed
};

struct CategorizedFunction {
  std::string function_id;
  FunctionCategory category = FunctionCategory::Unknown;
  PredictiveValues predictive;
  std::vector<CorrelationLink> links;
  int trained_from_day = 1;
  OfflineWtStats offline_stats;
};

using CategorizationMap = std::vector<CategorizedFunction>;  // sorted by function_id

// ---------------------------------------------------------------------------
// Deterministic checks

namespace detail {

inline bool regular_test(const std::vector<int>& wts, const RunConfig& cfg) {
  if (wts.size() < static_cast<std::size_t>(cfg.min_wt_samples)) return false;
  int spread = percentile_nearest_rank(wts, 95.0) - percentile_nearest_rank(wts, 5.0);
  return spread <= 1 || coeff_of_variation(wts) <= cfg.cv_limit;
}

inline bool appro_regular_test(const std::vector<int>& wts, const RunConfig& cfg) {
  if (wts.size() < static_cast<std::size_t>(cfg.min_wt_samples)) return false;
  return static_cast<double>(top_modes_coverage(wts, cfg.n_modes)) >=
         cfg.appro_coverage * static_cast<double>(wts.size());
}

inline std::vector<int> mode_values(const std::vector<int>& wts, int n) {
  std::vector<int> out;
  for (auto [value, count] : top_modes(wts, n)) out.push_back(value);
  return out;
}

}  // namespace detail

// Runs the pattern definitions in priority order — always-warm, regular,
// appro-regular, dense, successive — returning the first match. Regular and
// appro-regular retry on slacked waiting times (boundary-trimmed, then merged);
// dense and successive see the raw series only. probe, when given, records
// which definitions were evaluated.
inline std::optional<DeterministicResult> classify_deterministic(
    std::span<const Count> counts, const RunConfig& cfg,
    std::vector<FunctionCategory>* probe = nullptr) {
  std::uint64_t idle = 0, invoked = 0;
  for (Count c : counts) (c > 0 ? invoked : idle) += 1;
  if (invoked == 0) return std::nullopt;

  if (probe) probe->push_back(FunctionCategory::AlwaysWarm);
  if (static_cast<double>(idle) <= cfg.warm_ratio * static_cast<double>(counts.size()))
    return DeterministicResult{FunctionCategory::AlwaysWarm, PredictiveValues::none()};

  const std::vector<int> raw = extract_wts(counts);
  const std::vector<int> trimmed = trim_boundary_wts(raw);
  const std::vector<int> merged =
      trimmed.empty() ? std::vector<int>{}
                      : merge_adjacent_wts(trimmed, cfg.mode_tolerance, cfg.small_wt_threshold);
  const std::vector<int>* stages[] = {&raw, &trimmed, &merged};

  if (probe) probe->push_back(FunctionCategory::Regular);
  for (const std::vector<int>* wts : stages) {
    if (detail::regular_test(*wts, cfg))
      return DeterministicResult{FunctionCategory::Regular,
                                 PredictiveValues::discrete({median_nearest_rank(*wts)})};
  }

  if (probe) probe->push_back(FunctionCategory::ApproRegular);
  for (const std::vector<int>* wts : stages) {
    if (detail::appro_regular_test(*wts, cfg))
      return DeterministicResult{FunctionCategory::ApproRegular,
                                 PredictiveValues::discrete(detail::mode_values(*wts, cfg.n_modes))};
  }

  if (probe) probe->push_back(FunctionCategory::Dense);
  if (raw.size() >= static_cast<std::size_t>(cfg.min_wt_samples) &&
      percentile_nearest_rank(raw, 90.0) <= cfg.dense_constant) {
    std::vector<int> modes = detail::mode_values(raw, cfg.k_modes);
    return DeterministicResult{
        FunctionCategory::Dense,
        PredictiveValues::range(*std::min_element(modes.begin(), modes.end()),
                                *std::max_element(modes.begin(), modes.end()))};
  }

  if (probe) probe->push_back(FunctionCategory::Successive);
  std::vector<int> ats = extract_ats(counts);
  std::vector<std::int64_t> ans = extract_ans(counts);
  if (!ats.empty()) {
    bool at_ok = *std::min_element(ats.begin(), ats.end()) >= cfg.gamma1;
    bool an_ok = *std::min_element(ans.begin(), ans.end()) >= cfg.gamma2;
    bool hit = cfg.successive_requires_both ? (at_ok && an_ok) : (at_ok || an_ok);
    if (hit) return DeterministicResult{FunctionCategory::Successive, PredictiveValues::none()};
  }

  return std::nullopt;
}

inline std::optional<DeterministicResult> classify_deterministic(const InvocationSeries& s,
                                                                 const RunConfig& cfg) {
  return classify_deterministic(std::span<const Count>(s.counts), cfg);
}

// Retries the deterministic checks on suffix windows that drop the oldest days
// one at a time — days 2..d, 3..d, ... up to the window starting at day
// floor(d/2) — and returns the first success.
inline std::optional<ForgettingResult> apply_forgetting(std::span<const Count> counts, int days,
                                                        int minutes_per_day, const RunConfig& cfg) {
  if (days < 2) return std::nullopt;
  for (int start_day = 2; start_day <= days / 2; ++start_day) {
    std::size_t offset = static_cast<std::size_t>(start_day - 1) * minutes_per_day;
    auto r = classify_deterministic(counts.subspan(offset), cfg);
    if (r) return ForgettingResult{r->category, r->predictive, start_day};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Indeterminate assignment

struct StrategyOutcome {
  std::uint64_t cold_starts = 0;
  std::uint64_t wasted_minutes = 0;
};

namespace detail {

// Replays the validation window for one function under a given preload rule.
// Occupancy is worst-case: the eviction slot still counts as a wasted minute,
// and the cold-start slot counts as an invoked (not wasted) minute.
template <class PreloadFn>
StrategyOutcome replay_validation(std::span<const Count> counts, int theta_givenup,
                                  PreloadFn&& preload) {
  StrategyOutcome out;
  bool loaded = false;
  int wt = 0;
  std::optional<Slot> last;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > 0) {
      if (!loaded) {
        ++out.cold_starts;
        loaded = true;
      }
      last = static_cast<Slot>(t);
      wt = 0;
    } else {
      ++wt;
      bool flag = preload(static_cast<Slot>(t), last);
      if (!flag && wt >= theta_givenup) {
        if (loaded) {
          loaded = false;
          ++out.wasted_minutes;  // eviction slot is still occupied
        }
      } else if (flag) {
        loaded = true;
        ++out.wasted_minutes;
      } else if (loaded) {
        ++out.wasted_minutes;
      }
    }
  }
  return out;
}

inline StrategyOutcome replay_pulsed(std::span<const Count> counts, int theta_pulsed) {
  return replay_validation(counts, theta_pulsed, [](Slot, const std::optional<Slot>&) { return false; });
}

inline StrategyOutcome replay_correlated(std::span<const Count> target,
                                         const std::vector<std::pair<const InvocationSeries*, int>>& indicators,
                                         int theta_givenup) {
  // last invoked slot per indicator, updated as t sweeps forward
  std::vector<Slot> last_ind(indicators.size(), -1);
  std::size_t n = target.size();
  return replay_validation(target, theta_givenup, [&, t_seen = std::size_t{0}](
                                                      Slot t, const std::optional<Slot>&) mutable {
    while (t_seen <= static_cast<std::size_t>(t) && t_seen < n) {
      for (std::size_t i = 0; i < indicators.size(); ++i)
        if (indicators[i].first->counts[t_seen] > 0) last_ind[i] = static_cast<Slot>(t_seen);
      ++t_seen;
    }
    for (std::size_t i = 0; i < indicators.size(); ++i)
      if (last_ind[i] >= 0 && t - last_ind[i] <= indicators[i].second) return true;
    return false;
  });
}

inline StrategyOutcome replay_possible(std::span<const Count> counts,
                                       const PredictiveValues& predictive, const RunConfig& cfg) {
  FunctionProfile probe;
  probe.category = FunctionCategory::Possible;
  probe.predictive = predictive;
  return replay_validation(counts, cfg.theta_givenup_for(FunctionCategory::Possible),
                           [&](Slot t, const std::optional<Slot>& last) {
                             probe.last_invoked = last;
                             return should_preload(probe, t, cfg.theta_prewarm,
                                                   cfg.possible_range_limit);
                           });
}

}  // namespace detail

struct IndeterminateResult {
  FunctionCategory category = FunctionCategory::Unknown;
  PredictiveValues predictive;
  std::vector<CorrelationLink> links;
};

// Decides between the pulsed / correlated / possible strategies by replaying
// the validation window. A strategy that minimizes both cold starts and wasted
// memory wins outright (ties resolved in that priority order); otherwise the
// rise-rate rule weighs the cold-start minimizer i against the memory
// minimizer j: choose i iff ((cs_j - cs_i)/cs_i) * alpha <= (wm_i - wm_j)/wm_j,
// with a zero cs_i winning for i and a zero wm_j winning for j. Functions never
// invoked during validation stay unknown.
inline IndeterminateResult assign_indeterminate(const std::string& function_id,
                                                const TraceDataset& fit_ds,
                                                const TraceDataset& val_ds, const RunConfig& cfg) {
  const InvocationSeries* val = val_ds.find_series(function_id);
  const InvocationSeries* fit = fit_ds.find_series(function_id);
  if (!val || !fit) throw std::invalid_argument("assign_indeterminate: unknown id " + function_id);
  if (val->invoked_slot_count() == 0) return IndeterminateResult{};

  struct Candidate {
    FunctionCategory category;
    StrategyOutcome outcome;
    PredictiveValues predictive;
    std::vector<CorrelationLink> links;
  };
  std::vector<Candidate> cands;
  std::span<const Count> val_counts(val->counts);

  cands.push_back(Candidate{
      FunctionCategory::Pulsed,
      detail::replay_pulsed(val_counts, cfg.theta_givenup_for(FunctionCategory::Pulsed)),
      PredictiveValues::none(),
      {}});

  if (!cfg.disable_corr) {
    std::vector<CorrelationLink> links = mine_offline_links(function_id, fit_ds, cfg);
    if (!links.empty()) {
      std::vector<std::pair<const InvocationSeries*, int>> indicators;
      for (const CorrelationLink& l : links) {
        if (const InvocationSeries* ind = val_ds.find_series(l.indicator_id))
          indicators.emplace_back(ind, l.lag);
      }
      cands.push_back(Candidate{
          FunctionCategory::Correlated,
          detail::replay_correlated(val_counts, indicators,
                                    cfg.theta_givenup_for(FunctionCategory::Correlated)),
          PredictiveValues::none(), std::move(links)});
    }
  }

  std::vector<int> dups = detail::duplicated_values(extract_wts(std::span<const Count>(fit->counts)));
  if (!dups.empty()) {
    PredictiveValues pv = PredictiveValues::discrete(std::move(dups));
    cands.push_back(Candidate{FunctionCategory::Possible,
                              detail::replay_possible(val_counts, pv, cfg), pv, {}});
  }

  auto pick = [&](const Candidate& c) {
    return IndeterminateResult{c.category, c.predictive, c.links};
  };

  for (const Candidate& c : cands) {
    bool dominant = true;
    for (const Candidate& other : cands)
      if (other.outcome.cold_starts < c.outcome.cold_starts ||
          other.outcome.wasted_minutes < c.outcome.wasted_minutes)
        dominant = false;
    if (dominant) return pick(c);
  }

  std::size_t i = 0, j = 0;
  for (std::size_t k = 1; k < cands.size(); ++k) {
    if (cands[k].outcome.cold_starts < cands[i].outcome.cold_starts) i = k;
    if (cands[k].outcome.wasted_minutes < cands[j].outcome.wasted_minutes) j = k;
  }
  double cs_i = static_cast<double>(cands[i].outcome.cold_starts);
  double cs_j = static_cast<double>(cands[j].outcome.cold_starts);
  double wm_i = static_cast<double>(cands[i].outcome.wasted_minutes);
  double wm_j = static_cast<double>(cands[j].outcome.wasted_minutes);
  if (cs_i == 0.0) return pick(cands[i]);
  if (wm_j == 0.0) return pick(cands[j]);
  double rise_cs = (cs_j - cs_i) / cs_i;
  double rise_wm = (wm_i - wm_j) / wm_j;
  return rise_cs * cfg.alpha <= rise_wm ? pick(cands[i]) : pick(cands[j]);
}

// ---------------------------------------------------------------------------
// Whole-dataset driver

namespace detail {

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  int spawn = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(static_cast<std::size_t>(spawn));
  for (int w = 1; w < spawn; ++w) pool.emplace_back(run);
  run();
  for (std::thread& th : pool) th.join();
}

}  // namespace detail

// Categorizes every function in the training window. Phase one runs the
// deterministic checks (plus forgetting) per function; phase two resolves the
// remaining functions against a fit/validation split of the training window.
// Output order matches the dataset's sorted function order and is independent
// of the worker count.
inline CategorizationMap categorize_all(const TraceDataset& train_ds, const RunConfig& cfg) {
  if (train_ds.days < 2) throw std::invalid_argument("categorize_all: need at least 2 train days");
  int val_days = std::min(cfg.validation_days, train_ds.days - 1);
  int fit_days = train_ds.days - val_days;
  auto [fit_ds, val_ds] = split_dataset(train_ds, fit_days, val_days);

  CategorizationMap cats(train_ds.size());
  std::vector<std::uint8_t> open(train_ds.size(), 0);

  detail::parallel_for(train_ds.size(), cfg.workers, [&](std::size_t idx) {
    const InvocationSeries& s = train_ds.series[idx];
    CategorizedFunction& out = cats[idx];
    out.function_id = s.function_id;
    std::span<const Count> counts(s.counts);
    if (auto det = classify_deterministic(counts, cfg)) {
      out.category = det->category;
      out.predictive = det->predictive;
      out.trained_from_day = 1;
      return;
    }
    if (!cfg.disable_forgetting) {
      if (auto fg = apply_forgetting(counts, train_ds.days, train_ds.minutes_per_day, cfg)) {
        out.category = fg->category;
        out.predictive = fg->predictive;
        out.trained_from_day = fg->start_day;
        return;
      }
    }
    open[idx] = 1;
  });

  const TraceDataset& fit_ref = fit_ds;
  const TraceDataset& val_ref = val_ds;
  detail::parallel_for(train_ds.size(), cfg.workers, [&](std::size_t idx) {
    if (!open[idx]) return;
    CategorizedFunction& out = cats[idx];
    IndeterminateResult r = assign_indeterminate(out.function_id, fit_ref, val_ref, cfg);
    out.category = r.category;
    out.predictive = r.predictive;
    out.links = std::move(r.links);
    out.trained_from_day = 1;
  });

  detail::parallel_for(train_ds.size(), cfg.workers, [&](std::size_t idx) {
    const InvocationSeries& s = train_ds.series[idx];
    std::size_t offset =
        static_cast<std::size_t>(cats[idx].trained_from_day - 1) * train_ds.minutes_per_day;
    std::vector<int> wts = extract_wts(std::span<const Count>(s.counts).subspan(offset));
    cats[idx].offline_stats = OfflineWtStats::from_wts(wts, cfg.n_modes);
  });

  return cats;
}

// Rebuilds the offline stats snapshot (not stored in the categorization CSV)
// from the training trace, mirroring categorize_all's final pass.
inline void rebuild_offline_stats(CategorizationMap& cats, const TraceDataset& train_ds,
                                  const RunConfig& cfg) {
  for (CategorizedFunction& c : cats) {
    const InvocationSeries* s = train_ds.find_series(c.function_id);
    if (!s) continue;
    std::size_t offset =
        static_cast<std::size_t>(c.trained_from_day - 1) * train_ds.minutes_per_day;
    std::vector<int> wts = extract_wts(std::span<const Count>(s->counts).subspan(offset));
    c.offline_stats = OfflineWtStats::from_wts(wts, cfg.n_modes);
  }
}

// ---------------------------------------------------------------------------
// Categorization CSV

inline void write_categorization_csv(const CategorizationMap& cats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_categorization_csv: cannot open " + path);
  out << "function_id,category,predictive_kind,predictive_values,link_ids,trained_from_day\n";
  for (const CategorizedFunction& c : cats) {
    out << c.function_id << ',' << to_string(c.category) << ',' << to_string(c.predictive.kind)
        << ',';
    for (std::size_t i = 0; i < c.predictive.values.size(); ++i)
      out << (i ? "|" : "") << c.predictive.values[i];
    out << ',';
    for (std::size_t i = 0; i < c.links.size(); ++i)
      out << (i ? "|" : "") << c.links[i].indicator_id;
    out << ',' << c.trained_from_day << '\n';
  }
}

inline CategorizationMap load_categorization_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_categorization_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("function_id,category,predictive_kind,predictive_values,link_ids", 0) != 0)
    throw std::runtime_error("load_categorization_csv: " + path + ": unexpected header");
  CategorizationMap cats;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, cat_s, kind_s, values_s, links_s, day_s;
    if (!std::getline(row, id, ',') || !std::getline(row, cat_s, ',') ||
        !std::getline(row, kind_s, ',') || !std::getline(row, values_s, ',') ||
        !std::getline(row, links_s, ',') || !std::getline(row, day_s)) {
      std::ostringstream msg;
      msg << "load_categorization_csv: " << path << ":" << lineno << ": malformed row";
      throw std::runtime_error(msg.str());
    }
    CategorizedFunction c;
    c.function_id = id;
    auto cat = parse_category(cat_s);
    if (!cat) throw std::runtime_error("load_categorization_csv: unknown category " + cat_s);
    c.category = *cat;
    std::vector<int> values;
    if (!values_s.empty()) {
      std::istringstream vs(values_s);
      std::string v;
      while (std::getline(vs, v, '|')) values.push_back(std::stoi(v));
    }
    if (kind_s == "discrete") c.predictive = PredictiveValues::discrete(std::move(values));
    else if (kind_s == "range") {
      if (values.size() != 2)
        throw std::runtime_error("load_categorization_csv: range needs exactly lo|hi");
      c.predictive = PredictiveValues::range(values[0], values[1]);
    } else if (kind_s != "none") {
      throw std::runtime_error("load_categorization_csv: unknown predictive kind " + kind_s);
    }
    if (!links_s.empty()) {
      std::istringstream ls(links_s);
      std::string ind;
      while (std::getline(ls, ind, '|'))
        c.links.push_back(CorrelationLink{c.function_id, ind, 0, 0.0});
    }
    c.trained_from_day = std::stoi(day_s);
    cats.push_back(std::move(c));
  }
  return cats;
}

// Restores lag/score on links loaded from the categorization CSV using the
// richer link dump.
inline void attach_links(CategorizationMap& cats, const std::vector<CorrelationLink>& links) {
  std::unordered_map<std::string, const CorrelationLink*> by_key;
  for (const CorrelationLink& l : links) by_key[l.target_id + "\x1f" + l.indicator_id] = &l;
  for (CategorizedFunction& c : cats) {
    for (CorrelationLink& l : c.links) {
      auto it = by_key.find(l.target_id + "\x1f" + l.indicator_id);
      if (it != by_key.end()) {
        l.lag = it->second->lag;
        l.score = it->second->score;
      }
    }
  }
}

// All mined links across a categorization, for the link dump artifact.
inline std::vector<CorrelationLink> collect_links(const CategorizationMap& cats) {
  std::vector<CorrelationLink> all;
  for (const CategorizedFunction& c : cats)
    for (const CorrelationLink& l : c.links) all.push_back(l);
  return all;
}

}  // namespace spes
