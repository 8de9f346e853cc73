#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "horam/oblivious_sort.hpp"

using namespace horam;

TEST(OeMergesort, Empty) {
  std::vector<int> v;
  oe_mergesort(v);
  EXPECT_TRUE(v.empty());
  EXPECT_TRUE(oe_network(0).empty());
  EXPECT_TRUE(oe_network(1).empty());
}

TEST(OeMergesort, FourElementNetwork) {
  using P = std::pair<std::size_t, std::size_t>;
  const std::vector<P> expected{{0, 1}, {2, 3}, {0, 2}, {1, 3}, {1, 2}};
  EXPECT_EQ(oe_network(4), expected);
  std::vector<int> v{3, 1, 2, 4};
  oe_mergesort(v);
  EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4}));
}

// 0/1 principle: a comparator network sorts everything iff it sorts every
// 0/1 input.
TEST(OeMergesort, ZeroOnePrinciple) {
  for (std::size_t n = 1; n <= 16; ++n) {
    const auto net = oe_network(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<int> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = mask >> i & 1;
      for (auto [a, b] : net)
        if (v[b] < v[a]) std::swap(v[a], v[b]);
      ASSERT_TRUE(std::is_sorted(v.begin(), v.end())) << "n=" << n << " mask=" << mask;
    }
  }
}

TEST(OeMergesort, MatchesStdSort) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {2u, 3u, 7u, 100u, 1000u, 1024u}) {
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = rng() % 50;
    auto oracle = v;
    std::sort(oracle.begin(), oracle.end());
    oe_mergesort(v);
    EXPECT_EQ(v, oracle);
  }
}

TEST(OeMergesort, ComparatorSequenceDependsOnLengthOnly) {
  std::mt19937_64 rng(2);
  TouchLog first;
  std::vector<int> a(300);
  for (auto& x : a) x = static_cast<int>(rng());
  oe_mergesort(a, std::less<>{}, &first, 4);
  for (int trial = 0; trial < 5; ++trial) {
    TouchLog other;
    std::vector<int> b(300);
    for (auto& x : b) x = static_cast<int>(rng() % 3);
    oe_mergesort(b, std::less<>{}, &other, 4);
    EXPECT_TRUE(first.same_sequence(other));
  }
  EXPECT_EQ(first.size(), 4 * oe_network(300).size());
}

TEST(OeMergesort, CustomOrder) {
  std::vector<int> v{1, 5, 3, 9, 2};
  oe_mergesort(v, std::greater<>{});
  EXPECT_EQ(v, (std::vector<int>{9, 5, 3, 2, 1}));
}

TEST(KeyedSort, StableAndMatchesStdStableSort) {
  std::mt19937_64 rng(21);
  for (std::size_t n : {0u, 1u, 2u, 7u, 64u, 1000u}) {
    std::vector<std::pair<int, int>> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = {static_cast<int>(rng() % 10), static_cast<int>(i)};
    auto expect = v;
    std::stable_sort(expect.begin(), expect.end(), [](auto& a, auto& b) { return a.first < b.first; });
    oe_sort_by_key(v, [](const std::pair<int, int>& p) { return SortKey(p.first); });
    EXPECT_EQ(v, expect) << "n=" << n;
  }
}

TEST(KeyedSort, SameTouchesAsComparatorSort) {
  std::vector<int> a{5, 3, 9, 1, 1, 7, 2}, b = a;
  TouchLog la, lb;
  oe_mergesort(a, std::less<>{}, &la, 4);
  oe_sort_by_key(b, [](int x) { return SortKey(x); }, &lb, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(la.entries(), lb.entries());
}

TEST(Compaction, KeepsOrderAgainstFilterOracle) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = rng() % 90;
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (rng() % 3 == 0) ? -1 : static_cast<int>(i);
    std::vector<int> kept;
    std::copy_if(v.begin(), v.end(), std::back_inserter(kept), [](int x) { return x >= 0; });
    const std::size_t c = oe_compact(v, [](int x) { return x >= 0; });
    ASSERT_EQ(c, kept.size());
    EXPECT_TRUE(std::equal(kept.begin(), kept.end(), v.begin())) << "trial " << trial;
    EXPECT_TRUE(std::all_of(v.begin() + static_cast<std::ptrdiff_t>(c), v.end(), [](int x) { return x < 0; }));
  }
}

TEST(Compaction, TouchesDependOnLengthOnly) {
  TouchLog la, lb;
  std::vector<int> a(37, 1), b(37, -1);
  oe_compact(a, [](int x) { return x > 0; }, &la, 2);
  oe_compact(b, [](int x) { return x > 0; }, &lb, 2);
  EXPECT_EQ(la.entries(), lb.entries());
  // Rounds of shifts by 1, 2, 4, 8, 16, 32.
  std::uint64_t pairs = 0;
  for (std::size_t step = 1; step < 37; step <<= 1) pairs += 37 - step;
  EXPECT_EQ(la.size(), 4 * pairs);
}

TEST(Expansion, PlacesEveryItemAtItsTarget) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 90;
    std::vector<std::int64_t> targets;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 2) targets.push_back(static_cast<std::int64_t>(i));
    std::vector<std::int64_t> v(n, -1);
    std::copy(targets.begin(), targets.end(), v.begin());
    oe_expand(v, targets.size(), [](std::int64_t x) { return static_cast<std::uint64_t>(x); });
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_target = std::binary_search(targets.begin(), targets.end(), static_cast<std::int64_t>(i));
      EXPECT_EQ(v[i], is_target ? static_cast<std::int64_t>(i) : -1) << "trial " << trial << " slot " << i;
    }
  }
}

TEST(Expansion, RejectsNonIncreasingTargets) {
  std::vector<int> v{3, 3, 0, 0};
  EXPECT_THROW(oe_expand(v, 2, [](int x) { return static_cast<std::uint64_t>(x); }), std::invalid_argument);
  std::vector<int> w{9, 0};
  EXPECT_THROW(oe_expand(w, 1, [](int x) { return static_cast<std::uint64_t>(x); }), std::invalid_argument);
}

namespace {

// A sorter without a compaction network or keyed path.
struct PlainSorter {
  template <typename T, typename L>
  void operator()(std::vector<T>& v, L less, std::int32_t) const {
    std::sort(v.begin(), v.end(), less);
  }
};

}  // namespace

TEST(Compaction, FallbackSortIsStable) {
  std::vector<int> v{4, -1, 2, -1, -1, 9, 1};
  EXPECT_EQ(compact_by(PlainSorter{}, v, [](int x) { return x >= 0; }, 0), 4u);
  EXPECT_EQ(std::vector<int>(v.begin(), v.begin() + 4), (std::vector<int>{4, 2, 9, 1}));
}
