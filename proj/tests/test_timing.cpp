#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "spes/timing.hpp"

using namespace spes;

namespace {

// Independent run-length scan used as an oracle for the extractors: walk the
// series once, recording (is_active, length, invocations) runs.
struct Run {
  bool active;
  int length;
  std::int64_t invocations;
};

std::vector<Run> scan_runs(const std::vector<Count>& counts) {
  std::vector<Run> runs;
  for (Count c : counts) {
    bool active = c > 0;
    if (runs.empty() || runs.back().active != active)
      runs.push_back({active, 0, 0});
    runs.back().length += 1;
    runs.back().invocations += c;
  }
  return runs;
}

std::vector<Count> random_series(std::mt19937& rng, std::size_t len, double density) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 5);
  std::vector<Count> s(len, 0);
  for (auto& c : s)
    if (coin(rng) < density) c = static_cast<Count>(count(rng));
  return s;
}

}  // namespace

TEST_CASE("waiting/active extraction follows the worked example", "[timing]") {
  std::vector<Count> s = {28, 0, 12, 1, 0, 0, 0, 7};
  CHECK(extract_wts(s) == std::vector<int>{1, 3});
  CHECK(extract_ats(s) == std::vector<int>{1, 2, 1});
  CHECK(extract_ans(s) == std::vector<std::int64_t>{28, 13, 7});
}

TEST_CASE("extraction boundary cases", "[timing]") {
  SECTION("all slots invoked: no idle run between invocations") {
    std::vector<Count> s = {1, 2, 1, 1};
    CHECK(extract_wts(s).empty());
    CHECK(extract_ats(s) == std::vector<int>{4});
    CHECK(extract_ans(s) == std::vector<std::int64_t>{5});
  }
  SECTION("never invoked") {
    std::vector<Count> s = {0, 0, 0};
    CHECK(extract_wts(s).empty());
    CHECK(extract_ats(s).empty());
    CHECK(extract_ans(s).empty());
  }
  SECTION("single-slot series") {
    std::vector<Count> s = {5};
    CHECK(extract_ans(s) == std::vector<std::int64_t>{5});
    CHECK(extract_ats(s) == std::vector<int>{1});
    CHECK(extract_wts(s).empty());
  }
  SECTION("leading and trailing idle slots are not waiting times") {
    std::vector<Count> s = {0, 0, 1, 0, 2, 0, 0};
    CHECK(extract_wts(s) == std::vector<int>{1});
  }
  SECTION("empty series") {
    std::vector<Count> s;
    CHECK(extract_wts(s).empty());
    CHECK(extract_ats(s).empty());
    CHECK(extract_ans(s).empty());
  }
}

TEST_CASE("extractors agree with a run-length oracle on random series", "[timing]") {
  std::mt19937 rng(20240701);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t len = 1 + rng() % 200;
    std::vector<Count> s = random_series(rng, len, 0.05 + 0.9 * (trial % 10) / 10.0);
    std::vector<Run> runs = scan_runs(s);

    std::vector<int> wts, ats;
    std::vector<std::int64_t> ans;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].active) {
        ats.push_back(runs[i].length);
        ans.push_back(runs[i].invocations);
      } else if (i > 0 && i + 1 < runs.size()) {
        wts.push_back(runs[i].length);  // idle strictly between invocation runs
      }
    }
    REQUIRE(extract_wts(s) == wts);
    REQUIRE(extract_ats(s) == ats);
    REQUIRE(extract_ans(s) == ans);

    // Conservation: active + interior idle + boundary idle covers the window.
    std::int64_t at_sum = 0, wt_sum = 0, boundary = 0, total = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].active)
        at_sum += runs[i].length;
      else if (i == 0 || i + 1 == runs.size())
        boundary += runs[i].length;
      else
        wt_sum += runs[i].length;
      total += runs[i].invocations;
    }
    REQUIRE(at_sum + wt_sum + boundary == static_cast<std::int64_t>(len));
    std::int64_t an_sum = 0;
    for (auto v : extract_ans(s)) an_sum += v;
    REQUIRE(an_sum == total);
    if (!ats.empty()) REQUIRE(ats.size() == wts.size() + 1 + (runs.front().active ? 0 : 0));
    if (!ats.empty()) REQUIRE(extract_ats(s).size() == extract_wts(s).size() + 1);
  }
}

TEST_CASE("boundary trim", "[timing]") {
  CHECK(trim_boundary_wts({9, 10, 10, 10, 12}) == std::vector<int>{10, 10, 10});
  CHECK(trim_boundary_wts({5}).empty());
  CHECK(trim_boundary_wts({7, 8}).empty());
  CHECK(trim_boundary_wts({}).empty());
}

TEST_CASE("adjacent-waiting-time merging", "[timing]") {
  SECTION("interrupted long idles collapse back to the long value") {
    std::vector<int> wts = {1439, 1438, 1, 1439, 1438, 1};
    CHECK(merge_adjacent_wts(wts, 0.01, 0.1) == std::vector<int>{1439, 1439, 1439, 1439});
  }
  SECTION("constant sequence is untouched") {
    std::vector<int> wts = {60, 60, 60};
    CHECK(merge_adjacent_wts(wts, 0.01, 0.1) == wts);
  }
  SECTION("small value between two anchors joins the left one first") {
    std::vector<int> wts = {100, 99, 1, 100};
    CHECK(merge_adjacent_wts(wts, 0.05, 0.1) == std::vector<int>{100, 100, 100});
  }
  SECTION("values far from the mode do not absorb") {
    std::vector<int> wts = {100, 100, 50, 1, 100};
    // 50 is neither an anchor (|50-100| > 1) nor small (>= 10), so only the
    // 1 next to the trailing anchor merges.
    CHECK(merge_adjacent_wts(wts, 0.01, 0.1) == std::vector<int>{100, 100, 50, 101});
  }
  SECTION("sum, length, and idempotence properties on random input") {
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> pick(0, 9);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<int> wts;
      std::size_t len = 1 + rng() % 30;
      for (std::size_t i = 0; i < len; ++i) {
        int r = pick(rng);
        wts.push_back(r < 6 ? 120 + (r % 2) : (r < 8 ? 1 + r : 40 + r));
      }
      std::vector<int> merged = merge_adjacent_wts(wts, 0.05, 0.1);
      REQUIRE(merged.size() <= wts.size());
      long long before = 0, after = 0;
      for (int v : wts) before += v;
      for (int v : merged) after += v;
      REQUIRE(before == after);  // absorbed values are added, never dropped
      REQUIRE(merge_adjacent_wts(merged, 0.05, 0.1) == merged);
      std::vector<int> trimmed = trim_boundary_wts(wts);
      REQUIRE(trim_boundary_wts(trimmed) ==
              (trimmed.size() <= 2 ? std::vector<int>{} : std::vector<int>(trimmed.begin() + 1,
                                                                            trimmed.end() - 1)));
    }
  }
}

TEST_CASE("descriptive statistics", "[timing]") {
  SECTION("nearest-rank percentile") {
    CHECK(percentile_nearest_rank(std::vector<int>{1, 2, 3, 4}, 95.0) == 4);
    CHECK(percentile_nearest_rank(std::vector<int>{1, 2, 3, 4}, 50.0) == 2);
    CHECK(percentile_nearest_rank(std::vector<int>{7}, 5.0) == 7);
    CHECK_THROWS_AS(percentile_nearest_rank(std::vector<int>{}, 50.0), std::invalid_argument);
  }
  SECTION("percentile matches the sorted-rank oracle on random data") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> val(0, 100);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<int> v(1 + rng() % 40);
      for (int& x : v) x = val(rng);
      double p = (rng() % 101);
      std::vector<int> sorted = v;
      std::sort(sorted.begin(), sorted.end());
      std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * sorted.size()));
      if (rank == 0) rank = 1;
      REQUIRE(percentile_nearest_rank(v, p) == sorted[rank - 1]);
    }
  }
  SECTION("coefficient of variation") {
    CHECK(coeff_of_variation(std::vector<int>{5, 5, 5}) == 0.0);
    CHECK(coeff_of_variation(std::vector<int>{2, 4}) == Catch::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(coeff_of_variation(std::vector<int>{}), std::invalid_argument);
  }
  SECTION("top modes order by count, then by smaller value") {
    auto modes = top_modes({3, 3, 7, 7, 7, 9}, 2);
    REQUIRE(modes.size() == 2);
    CHECK(modes[0] == std::pair<int, int>{7, 3});
    CHECK(modes[1] == std::pair<int, int>{3, 2});
    auto tied = top_modes({4, 4, 9, 9}, 1);
    REQUIRE(tied.size() == 1);
    CHECK(tied[0] == std::pair<int, int>{4, 2});
    CHECK(top_modes({1, 2}, 5).size() == 2);
    CHECK(top_modes_coverage({3, 3, 7, 7, 7, 9}, 2) == 5);
  }
}
