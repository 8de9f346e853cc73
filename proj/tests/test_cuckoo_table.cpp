#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "horam/cuckoo_table.hpp"
#include "oracles.hpp"

using namespace horam;
using namespace horam::testing;

namespace {

const SeedPair S0{0x1234, 0xabcd};

}  // namespace

TEST(CuckooTable, Construction) {
  CuckooTable<int> a(8, 2, S0, 0.5);
  EXPECT_EQ(a.max_keys(), 4u);
  EXPECT_EQ(a.cells(), 16u);
  EXPECT_TRUE(a.empty());
  CuckooTable<int> b(1, 0, S0, 0.5);
  EXPECT_EQ(b.max_keys(), 0u);
  CuckooTable<int> c(1024, 8, S0, 0.25);
  EXPECT_EQ(c.max_keys(), 768u);
  EXPECT_THROW(CuckooTable<int>(8, 2, S0, 0.0), ParameterError);
  EXPECT_THROW(CuckooTable<int>(8, 2, S0, 1.0), ParameterError);
  EXPECT_THROW(CuckooTable<int>(0, 2, S0, 0.5), ParameterError);
}

TEST(CuckooTable, HashRange) {
  HashPair h(S0, 37);
  for (LogicalKey x = -500; x < 500; ++x) {
    EXPECT_LT(h.h1(x), 37u);
    EXPECT_LT(h.h2(x), 37u);
  }
  HashPair again(S0, 37);
  EXPECT_EQ(h.h1(99), again.h1(99));
  EXPECT_EQ(h.h2(-7), again.h2(-7));
}

TEST(CuckooTable, LookupInsertRemove) {
  CuckooTable<char> t(16, 2, S0);
  EXPECT_FALSE(t.lookup(7));
  EXPECT_EQ(t.insert(7, 'A'), InsertStatus::Ok);
  EXPECT_EQ(t.lookup(7), 'A');
  EXPECT_TRUE(t.t1()[t.hashes().h1(7)].has_value());
  EXPECT_THROW(t.insert(7, 'B'), DuplicateKey);
  EXPECT_EQ(t.remove(7), RemoveStatus::Ok);
  EXPECT_FALSE(t.lookup(7));
  EXPECT_EQ(t.remove(7), RemoveStatus::NotFound);
}

TEST(CuckooTable, CapacityEnforced) {
  CuckooTable<int> t(4, 4, S0, 0.5);
  EXPECT_EQ(t.insert(1, 1), InsertStatus::Ok);
  EXPECT_EQ(t.insert(2, 2), InsertStatus::Ok);
  EXPECT_THROW(t.insert(3, 3), CapacityExceeded);
}

TEST(CuckooTable, InsertRemoveCycles) {
  CuckooTable<int> t(64, 2, S0);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(t.insert(42, i), InsertStatus::Ok);
    ASSERT_EQ(t.lookup(42), i);
    ASSERT_EQ(t.remove(42), RemoveStatus::Ok);
    ASSERT_TRUE(t.empty());
    ASSERT_TRUE(std::none_of(t.t1().begin(), t.t1().end(), [](auto& s) { return s.has_value(); }));
    ASSERT_TRUE(std::none_of(t.t2().begin(), t.t2().end(), [](auto& s) { return s.has_value(); }));
  }
}

TEST(CuckooTable, ProbeShapeIsContentIndependent) {
  CuckooTable<int> empty(128, 5, S0);
  CuckooTable<int> full(128, 5, S0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 60; ++i) (void)full.insert(static_cast<LogicalKey>(rng() % 100000 + 1), i);
  for (LogicalKey x = -50; x < 50; ++x) {
    (void)empty.lookup(x);
    (void)full.lookup(x);
    EXPECT_EQ(empty.last_probe().t1_index, full.last_probe().t1_index);
    EXPECT_EQ(empty.last_probe().t2_index, full.last_probe().t2_index);
    EXPECT_EQ(full.last_probe().stash_slots, 5u);
  }
}

TEST(CuckooTable, RandomOpsKeepPlacementValid) {
  std::mt19937_64 rng(11);
  CuckooTable<int> t(256, 6, S0);
  std::map<LogicalKey, int> oracle;
  for (int step = 0; step < 20000; ++step) {
    const LogicalKey x = static_cast<LogicalKey>(rng() % 400) - 200;
    const int op = static_cast<int>(rng() % 3);
    if (op == 0 && !oracle.count(x) && t.count() < t.max_keys()) {
      if (t.insert(x, step) == InsertStatus::Ok) oracle[x] = step;
    } else if (op == 1) {
      const bool present = oracle.erase(x) > 0;
      EXPECT_EQ(t.remove(x), present ? RemoveStatus::Ok : RemoveStatus::NotFound);
    } else {
      auto got = t.lookup(x);
      auto it = oracle.find(x);
      ASSERT_EQ(got.has_value(), it != oracle.end());
      if (got) {
        ASSERT_EQ(*got, it->second);
      }
    }
    if (step % 97 == 0) {
      ASSERT_TRUE(t.placement_valid());
    }
  }
  EXPECT_TRUE(t.placement_valid());
  EXPECT_EQ(t.count(), oracle.size());
}

TEST(CuckooTable, OverflowRollsBackCleanly) {
  // Table with no stash: hammer until an insert fails, then check nothing moved.
  std::mt19937_64 rng(5);
  int overflows = 0;
  for (int trial = 0; trial < 200; ++trial) {
    CuckooTable<int> t(8, 0, {rng(), rng()}, 0.05);
    for (LogicalKey x = 1; t.count() < t.max_keys(); ++x) {
      std::vector<std::optional<CuckooTable<int>::Entry>> before(t.t1().begin(), t.t1().end());
      before.insert(before.end(), t.t2().begin(), t.t2().end());
      if (t.insert(x, static_cast<int>(x)) == InsertStatus::StashOverflow) {
        ++overflows;
        ASSERT_FALSE(t.contains(x));
        std::vector<std::optional<CuckooTable<int>::Entry>> after(t.t1().begin(), t.t1().end());
        after.insert(after.end(), t.t2().begin(), t.t2().end());
        ASSERT_EQ(before.size(), after.size());
        for (std::size_t i = 0; i < before.size(); ++i) {
          ASSERT_EQ(before[i].has_value(), after[i].has_value());
          if (before[i]) {
            ASSERT_EQ(before[i]->key, after[i]->key);
          }
        }
        ASSERT_TRUE(t.placement_valid());
        break;
      }
    }
  }
  EXPECT_GT(overflows, 0);
}

// With s = 0, sequential insertion fails exactly at the first prefix that the
// exhaustive oracle says cannot be placed.
TEST(CuckooTable, MatchesExhaustiveFeasibility) {
  std::mt19937_64 rng(77);
  int failures_seen = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::uint64_t m = trial % 2 ? 8 : 12;
    CuckooTable<int> t(m, 0, {rng(), rng()}, 0.05);
    const std::size_t n = std::min<std::size_t>(t.max_keys(), 12);
    std::vector<LogicalKey> keys;
    std::size_t first_fail = n;
    for (std::size_t i = 0; i < n; ++i) {
      const LogicalKey x = static_cast<LogicalKey>(rng() >> 20);
      keys.push_back(x);
      if (t.insert(x, 0) == InsertStatus::StashOverflow) {
        first_fail = i;
        break;
      }
    }
    std::size_t oracle_fail = n;
    std::vector<LogicalKey> prefix;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      prefix.push_back(keys[i]);
      if (!placeable(prefix, t.hashes())) {
        oracle_fail = i;
        break;
      }
    }
    ASSERT_EQ(first_fail, oracle_fail) << "trial " << trial;
    failures_seen += first_fail < n;
  }
  EXPECT_GT(failures_seen, 20);
}

TEST(CuckooTable, ParallelEdgesOverflowIntoStash) {
  // Search keys that share both hash cells.
  const HashPair h(S0, 8);
  std::vector<LogicalKey> same;
  for (LogicalKey x = 1; same.size() < 3; ++x)
    if (h.h1(x) == h.h1(1) && h.h2(x) == h.h2(1)) same.push_back(x);
  CuckooTable<int> t(8, 1, S0, 0.5);
  for (auto x : same) ASSERT_EQ(t.insert(x, 1), InsertStatus::Ok);
  EXPECT_EQ(t.stash_size(), 1u);
  EXPECT_FALSE(placeable(same, h));
  EXPECT_EQ(brute_min_stash(same, h), 1u);
  EXPECT_EQ(component_stats(same, h).min_stash(), 1u);
  for (auto x : same) EXPECT_TRUE(t.contains(x));
}

TEST(CuckooTable, StashOccupancyAtHalfLoad) {
  std::mt19937_64 rng(2024);
  std::map<std::size_t, int> histogram;
  const int trials = 2000;
  for (int trial = 0; trial < trials; ++trial) {
    CuckooTable<int> t(1024, 8, {rng(), rng()}, 0.5);
    std::set<LogicalKey> keys;
    while (keys.size() < 512) keys.insert(static_cast<LogicalKey>(rng() >> 1));
    for (auto x : keys) ASSERT_EQ(t.insert(x, 0), InsertStatus::Ok);
    ++histogram[t.stash_size()];
  }
  EXPECT_GE(histogram[0], trials * 99 / 100);
}

TEST(ComponentStats, SmallCases) {
  const HashPair h(S0, 64);
  std::vector<LogicalKey> one{5};
  auto a = component_stats(one, h);
  ASSERT_EQ(a.sizes.size(), 1u);
  EXPECT_EQ(a.sizes[0], 1u);

  std::vector<LogicalKey> parallel;
  for (LogicalKey x = 1; parallel.size() < 5; ++x)
    if (h.h1(x) == h.h1(1) && h.h2(x) == h.h2(1)) parallel.push_back(x);
  auto b = component_stats(parallel, h);
  ASSERT_EQ(b.sizes.size(), 1u);
  EXPECT_EQ(b.sizes[0], 5u);
  EXPECT_EQ(b.excess[0], 4u);
  EXPECT_EQ(b.min_stash(), 3u);
}

// Component min-stash equals the exhaustive minimum on small random graphs.
TEST(ComponentStats, MinStashMatchesBruteForce) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 150; ++trial) {
    const HashPair h({rng(), rng()}, 4 + trial % 5);
    std::vector<LogicalKey> keys;
    const std::size_t n = 3 + trial % 10;
    for (std::size_t i = 0; i < n; ++i) keys.push_back(static_cast<LogicalKey>(i * 7919 + trial));
    auto stats = component_stats(keys, h);
    ASSERT_EQ(stats.edge_total(), n);
    ASSERT_EQ(stats.min_stash(), brute_min_stash(keys, h)) << "trial " << trial;
  }
}
