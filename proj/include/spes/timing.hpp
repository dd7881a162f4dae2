// Waiting-time / active-time arithmetic over minute-indexed invocation counts:
// run extraction, boundary trimming, small-gap merging, and the order statistics
// (nearest-rank percentiles, coefficient of variation, top modes) the pattern
// checks are built from.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "spes/types.hpp"

namespace spes {

// Maximal idle runs strictly between invocation runs. Leading and trailing idle
// slots contribute nothing: a waiting time needs an invocation on both sides.
inline std::vector<int> extract_wts(std::span<const Count> counts) {
  std::vector<int> wts;
  bool seen_invocation = false;
  int run = 0;
  for (Count c : counts) {
    if (c > 0) {
      if (seen_invocation && run > 0) wts.push_back(run);
      seen_invocation = true;
      run = 0;
    } else if (seen_invocation) {
      ++run;
    }
  }
  return wts;
}

// Maximal runs of consecutive slots with at least one invocation, in slot order.
inline std::vector<int> extract_ats(std::span<const Count> counts) {
  std::vector<int> ats;
  int run = 0;
  for (Count c : counts) {
    if (c > 0) {
      ++run;
    } else if (run > 0) {
      ats.push_back(run);
      run = 0;
    }
  }
  if (run > 0) ats.push_back(run);
  return ats;
}

// Total invocations within each active run, parallel to extract_ats.
inline std::vector<std::int64_t> extract_ans(std::span<const Count> counts) {
  std::vector<std::int64_t> ans;
  std::int64_t sum = 0;
  bool in_run = false;
  for (Count c : counts) {
    if (c > 0) {
      sum += c;
      in_run = true;
    } else if (in_run) {
      ans.push_back(sum);
      sum = 0;
      in_run = false;
    }
  }
  if (in_run) ans.push_back(sum);
  return ans;
}

// Drops the first and last waiting times (boundary slack). Two or fewer entries
// leave nothing in the interior.
inline std::vector<int> trim_boundary_wts(std::vector<int> wts) {
  if (wts.size() <= 2) return {};
  return {wts.begin() + 1, wts.end() - 1};
}

// Merges small waiting times into neighbouring near-mode waiting times.
//
// The anchor mode is the most frequent value, ties broken toward the LARGER
// value (a small gap must never anchor the merge). Values within
// mode_tolerance*mode of the mode absorb adjacent values below
// small_threshold*mode, scanning left then right, anchors processed left to
// right; a scan stops at the sequence boundary, at any value that is not small,
// or at a position already consumed by an earlier merge. Absorbed values are
// added to their anchor, so the total sum is preserved.
inline std::vector<int> merge_adjacent_wts(const std::vector<int>& wts, double mode_tolerance,
                                           double small_threshold) {
  if (wts.size() < 2) return wts;

  std::map<int, int> freq;
  for (int v : wts) ++freq[v];
  int mode = 0, best = 0;
  for (auto [value, count] : freq) {
    if (count >= best) {  // >= walks toward the larger value on ties
      best = count;
      mode = value;
    }
  }

  const double near_band = mode_tolerance * mode;
  const double small_cut = small_threshold * mode;
  auto near_mode = [&](long long v) { return std::abs(static_cast<double>(v) - mode) <= near_band; };
  auto is_small = [&](long long v) { return static_cast<double>(v) < small_cut && !near_mode(v); };

  std::vector<long long> work(wts.begin(), wts.end());
  std::vector<bool> consumed(work.size(), false);

  for (std::size_t i = 0; i < work.size(); ++i) {
    if (consumed[i] || !near_mode(work[i])) continue;
    for (std::size_t j = i; j-- > 0;) {  // leftward
      if (consumed[j] || !is_small(work[j])) break;
      work[i] += work[j];
      consumed[j] = true;
    }
    for (std::size_t j = i + 1; j < work.size(); ++j) {  // rightward
      if (consumed[j] || !is_small(work[j])) break;
      work[i] += work[j];
      consumed[j] = true;
    }
  }

  std::vector<int> out;
  out.reserve(work.size());
  for (std::size_t i = 0; i < work.size(); ++i)
    if (!consumed[i]) out.push_back(static_cast<int>(work[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Order statistics

// Nearest-rank percentile: the ceil(p/100 * N)-th smallest value (1-based).
template <class T>
T percentile_nearest_rank(std::vector<T> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sequence");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile p out of [0,100]");
  std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * values.size()));
  if (rank == 0) rank = 1;
  if (rank > values.size()) rank = values.size();
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

template <class T>
T median_nearest_rank(std::vector<T> values) {
  return percentile_nearest_rank(std::move(values), 50.0);
}

template <class T>
double mean_of(const std::vector<T>& values) {
  if (values.empty()) throw std::invalid_argument("mean of empty sequence");
  double s = 0.0;
  for (const T& v : values) s += static_cast<double>(v);
  return s / values.size();
}

template <class T>
double population_stddev(const std::vector<T>& values) {
  double m = mean_of(values);
  double acc = 0.0;
  for (const T& v : values) {
    double d = static_cast<double>(v) - m;
    acc += d * d;
  }
  return std::sqrt(acc / values.size());
}

// Population stddev over mean. All waiting times are >= 1, so the mean is positive.
template <class T>
double coeff_of_variation(const std::vector<T>& values) {
  double m = mean_of(values);
  if (m == 0.0) throw std::invalid_argument("coefficient of variation with zero mean");
  return population_stddev(values) / m;
}

// The n most frequent values as (value, count), ordered by count descending and
// then by smaller value. Fewer than n distinct values yield a shorter list.
inline std::vector<std::pair<int, int>> top_modes(const std::vector<int>& values, int n) {
  if (n < 0) throw std::invalid_argument("top_modes: n must be >= 0");
  std::map<int, int> freq;
  for (int v : values) ++freq[v];
  std::vector<std::pair<int, int>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > static_cast<std::size_t>(n)) items.resize(static_cast<std::size_t>(n));
  return items;
}

// Sum of the counts of the top-n modes, used by coverage checks.
inline std::int64_t top_modes_coverage(const std::vector<int>& values, int n) {
  std::int64_t covered = 0;
  for (auto [value, count] : top_modes(values, n)) covered += count;
  return covered;
}

}  // namespace spes
