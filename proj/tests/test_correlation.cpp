#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include "spes/config.hpp"
#include "spes/correlation.hpp"

using namespace spes;

namespace {

std::vector<Count> series_with(std::size_t len, std::initializer_list<std::size_t> slots) {
  std::vector<Count> s(len, 0);
  for (std::size_t t : slots) s[t] = 1;
  return s;
}

std::vector<Count> random_series(std::mt19937& rng, std::size_t len, double density) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Count> s(len, 0);
  for (auto& c : s)
    if (coin(rng) < density) c = 1;
  return s;
}

// Literal restatement of the lagged rate: for each target slot, scan the
// indicator window [t - lag, t] directly.
double brute_lagged_rate(const std::vector<Count>& target, const std::vector<Count>& indicator,
                         int lag) {
  std::uint64_t slots = 0, hits = 0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (target[t] == 0) continue;
    ++slots;
    std::size_t from = t >= static_cast<std::size_t>(lag) ? t - lag : 0;
    for (std::size_t u = from; u <= t; ++u) {
      if (indicator[u] > 0) {
        ++hits;
        break;
      }
    }
  }
  return slots == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(slots);
}

// Minimal dataset builder for the mining tests.
TraceDataset dataset_of(
    std::vector<std::tuple<std::string, std::string, std::string, std::vector<Count>>> rows) {
  TraceDataset ds;
  ds.days = 1;
  for (auto& [owner, app, id, counts] : rows) {
    ds.minutes_per_day = static_cast<int>(counts.size());
    ds.metas.push_back(FunctionMeta{owner, app, id, TriggerType::Http});
    ds.series.push_back(InvocationSeries{id, 0, std::move(counts)});
  }
  ds.finalize();
  return ds;
}

}  // namespace

TEST_CASE("same-slot co-occurrence rate", "[correlation]") {
  SECTION("worked example: two of three target slots shared") {
    std::vector<Count> target = {1, 0, 1, 0, 1};
    std::vector<Count> other = {1, 0, 0, 0, 1};
    CHECK(cooccurrence_rate(std::span<const Count>(target), std::span<const Count>(other)) ==
          Catch::Approx(2.0 / 3.0));
  }

  SECTION("a series co-occurs perfectly with itself") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      auto s = random_series(rng, 200, 0.2);
      bool any = false;
      for (Count c : s) any = any || c > 0;
      if (!any) continue;
      CHECK(cooccurrence_rate(std::span<const Count>(s), std::span<const Count>(s)) == 1.0);
    }
  }

  SECTION("disjoint series score zero") {
    std::vector<Count> target = {1, 0, 1, 0};
    std::vector<Count> other = {0, 1, 0, 1};
    CHECK(cooccurrence_rate(std::span<const Count>(target), std::span<const Count>(other)) == 0.0);
  }

  SECTION("a never-invoked target scores zero") {
    std::vector<Count> target(8, 0);
    std::vector<Count> other(8, 1);
    CHECK(cooccurrence_rate(std::span<const Count>(target), std::span<const Count>(other)) == 0.0);
  }

  SECTION("misaligned series are rejected") {
    std::vector<Count> a(4, 1), b(5, 1);
    CHECK_THROWS_AS(cooccurrence_rate(std::span<const Count>(a), std::span<const Count>(b)),
                    std::invalid_argument);
  }
}

TEST_CASE("lagged co-occurrence rate", "[correlation]") {
  SECTION("indicator two slots earlier needs lag two") {
    auto target = series_with(10, {5});
    auto indicator = series_with(10, {3});
    CHECK(lagged_cooccurrence_rate(std::span<const Count>(target),
                                   std::span<const Count>(indicator), 1) == 0.0);
    CHECK(lagged_cooccurrence_rate(std::span<const Count>(target),
                                   std::span<const Count>(indicator), 2) == 1.0);
    CHECK(lagged_cooccurrence_rate(std::span<const Count>(target),
                                   std::span<const Count>(indicator), 9) == 1.0);
  }

  SECTION("an indicator that only fires later never counts") {
    auto target = series_with(10, {3});
    auto indicator = series_with(10, {5});
    for (int lag = 0; lag <= 9; ++lag)
      CHECK(lagged_cooccurrence_rate(std::span<const Count>(target),
                                     std::span<const Count>(indicator), lag) == 0.0);
  }

  SECTION("lag zero degenerates to the plain rate") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      auto target = random_series(rng, 150, 0.15);
      auto other = random_series(rng, 150, 0.15);
      CHECK(lagged_cooccurrence_rate(std::span<const Count>(target),
                                     std::span<const Count>(other), 0) ==
            cooccurrence_rate(std::span<const Count>(target), std::span<const Count>(other)));
    }
  }

  SECTION("matches a direct window scan and is non-decreasing in lag") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      auto target = random_series(rng, 120, 0.1);
      auto indicator = random_series(rng, 120, 0.1);
      double prev = -1.0;
      for (int lag = 0; lag <= 6; ++lag) {
        double got = lagged_cooccurrence_rate(std::span<const Count>(target),
                                              std::span<const Count>(indicator), lag);
        CHECK(got == Catch::Approx(brute_lagged_rate(target, indicator, lag)));
        CHECK(got >= prev);
        prev = got;
      }
    }
  }

  SECTION("negative lag is rejected") {
    std::vector<Count> a(4, 1);
    CHECK_THROWS_AS(
        lagged_cooccurrence_rate(std::span<const Count>(a), std::span<const Count>(a), -1),
        std::invalid_argument);
  }
}

TEST_CASE("offline link mining", "[correlation]") {
  RunConfig cfg;

  SECTION("a planted leader/follower pair mines back exactly") {
    // leader fires with distinct gaps; follower echoes three slots later
    auto leader = series_with(300, {10, 40, 95, 180, 260});
    auto follower = series_with(300, {13, 43, 98, 183, 263});
    TraceDataset ds = dataset_of({{"o1", "appA", "follower", follower},
                                  {"o2", "appA", "leader", leader},
                                  {"o3", "appB", "stranger", leader}});
    auto links = mine_offline_links("follower", ds, cfg);
    REQUIRE(links.size() == 1);
    CHECK(links[0].target_id == "follower");
    CHECK(links[0].indicator_id == "leader");
    CHECK(links[0].lag == 3);
    CHECK(links[0].score == 1.0);
  }

  SECTION("the smallest qualifying lag wins") {
    auto both = series_with(100, {5, 20, 50, 80});
    TraceDataset ds =
        dataset_of({{"o", "app", "target", both}, {"o", "app", "twin", both}});
    auto links = mine_offline_links("target", ds, cfg);
    REQUIRE(links.size() == 1);
    CHECK(links[0].lag == 0);
    CHECK(links[0].score == 1.0);
  }

  SECTION("candidates must share the app or the owner") {
    auto leader = series_with(100, {10, 40, 70});
    auto follower = series_with(100, {12, 42, 72});
    TraceDataset ds = dataset_of({{"o1", "app1", "follower", follower},
                                  {"o2", "app2", "leader", leader}});
    CHECK(mine_offline_links("follower", ds, cfg).empty());

    TraceDataset shared_owner = dataset_of({{"o1", "app1", "follower", follower},
                                            {"o1", "app2", "leader", leader}});
    CHECK(mine_offline_links("follower", shared_owner, cfg).size() == 1);
  }

  SECTION("below-threshold candidates are dropped") {
    // indicator precedes only one of the four target slots: rate 0.25 < 0.5
    auto target = series_with(200, {20, 60, 100, 140});
    auto weak = series_with(200, {19});
    TraceDataset ds =
        dataset_of({{"o", "app", "target", target}, {"o", "app", "weak", weak}});
    CHECK(mine_offline_links("target", ds, cfg).empty());
  }

  SECTION("a silent target yields no links") {
    TraceDataset ds = dataset_of({{"o", "app", "silent", std::vector<Count>(50, 0)},
                                  {"o", "app", "noisy", std::vector<Count>(50, 1)}});
    CHECK(mine_offline_links("silent", ds, cfg).empty());
  }

  SECTION("an unknown target is rejected") {
    TraceDataset ds = dataset_of({{"o", "app", "only", series_with(10, {1})}});
    CHECK_THROWS_AS(mine_offline_links("ghost", ds, cfg), std::invalid_argument);
  }
}

TEST_CASE("online correlation tracker", "[correlation]") {
  SECTION("a candidate firing with the target is an immediate hint") {
    OnlineCorrelationTracker tracker({1, 2}, 0.3, 0.1);
    std::vector<std::uint32_t> invoked = {1};
    CHECK(tracker.update(invoked, true));
    CHECK(tracker.rate(1) == 1.0);
    CHECK(tracker.rate(2) == 0.0);
  }

  SECTION("non-candidates never trigger") {
    OnlineCorrelationTracker tracker({1}, 0.3, 0.1);
    std::vector<std::uint32_t> invoked = {9};
    CHECK_FALSE(tracker.update(invoked, true));
    CHECK_FALSE(tracker.is_candidate(9));
  }

  SECTION("candidates far behind the best rate are deactivated") {
    OnlineCorrelationTracker tracker({1, 2}, 0.3, 0.1);
    std::vector<std::uint32_t> with_target = {1};
    // candidate 1 co-fires on three target slots; candidate 2 never does,
    // so its gap to the best rate reaches 1.0 and it goes quiet
    for (int i = 0; i < 3; ++i) tracker.update(with_target, true);
    CHECK(tracker.is_active(1));
    CHECK_FALSE(tracker.is_active(2));
    std::vector<std::uint32_t> only_two = {2};
    CHECK_FALSE(tracker.update(only_two, false));
  }

  SECTION("a recovering candidate is reactivated") {
    OnlineCorrelationTracker tracker({1, 2}, 0.3, 0.25);
    std::vector<std::uint32_t> only_one = {1};
    std::vector<std::uint32_t> both = {1, 2};
    // slot 1: only candidate 1 fires -> candidate 2 is a full gap behind
    tracker.update(only_one, true);
    CHECK_FALSE(tracker.is_active(2));
    // candidate 2 then co-fires on every subsequent target slot, closing the
    // gap: 1/2, 2/3, 3/4 behind by 1/2, 1/3, 1/4 -> within 0.25 at the third
    tracker.update(both, true);
    CHECK_FALSE(tracker.is_active(2));
    tracker.update(both, true);
    CHECK_FALSE(tracker.is_active(2));
    tracker.update(both, true);
    CHECK(tracker.is_active(2));
    CHECK(tracker.max_rate() == 1.0);
    CHECK(tracker.rate(2) == Catch::Approx(0.75));
  }

  SECTION("idle slots do not move the rates") {
    OnlineCorrelationTracker tracker({1}, 0.3, 0.1);
    std::vector<std::uint32_t> invoked = {1};
    tracker.update(invoked, true);
    double before = tracker.rate(1);
    std::vector<std::uint32_t> none;
    tracker.update(none, false);
    tracker.update(invoked, false);  // candidate alone, target idle
    CHECK(tracker.rate(1) == before);
  }
}
