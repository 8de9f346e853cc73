#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trace.hpp"

namespace horam {

/// Visits the compare-exchange pairs of Batcher's odd-even mergesort network
/// for n inputs, in execution order. The sequence depends on n alone.
template <typename Visit>
void for_each_oe_comparator(std::size_t n, Visit&& visit) {
  for (std::size_t p = 1; p < n; p <<= 1) {
    for (std::size_t k = p; k >= 1; k >>= 1) {
      for (std::size_t j = k % p; j + k < n; j += 2 * k) {
        const std::size_t end = j + std::min(k, n - j - k);
        // Both ends must lie in one block of 2p; a run of k positions
        // crosses at most one block boundary.
        const std::size_t block = j & ~(2 * p - 1);
        const std::size_t stop1 = std::min(end, block + 2 * p - k);
        for (std::size_t q = j; q < stop1; ++q) visit(q, q + k);
        const std::size_t start2 = std::max(j, block + 2 * p);
        const std::size_t stop2 = std::min(end, block + 4 * p - k);
        for (std::size_t q = start2; q < stop2; ++q) visit(q, q + k);
      }
    }
  }
}

inline std::vector<std::pair<std::size_t, std::size_t>> oe_network(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for_each_oe_comparator(n, [&](std::size_t a, std::size_t b) { pairs.emplace_back(a, b); });
  return pairs;
}

/// Sorts in place with the odd-even mergesort network. When a log is given
/// every compare-exchange is recorded against `region`.
template <typename T, typename Less = std::less<>>
void oe_mergesort(std::span<T> items, Less less = {}, TouchLog* log = nullptr, std::int32_t region = 0) {
  if (log && log->mode() != TraceMode::Count) {
    for_each_oe_comparator(items.size(), [&](std::size_t a, std::size_t b) {
      log->compare_exchange(region, a, b);
      if (less(items[b], items[a])) std::swap(items[a], items[b]);
    });
    return;
  }
  std::uint64_t comparators = 0;
  for_each_oe_comparator(items.size(), [&](std::size_t a, std::size_t b) {
    ++comparators;
    if (less(items[b], items[a])) std::swap(items[a], items[b]);
  });
  if (log) log->add_counts(region, 2 * comparators, 2 * comparators);
}

template <typename T, typename Less = std::less<>>
void oe_mergesort(std::vector<T>& items, Less less = {}, TouchLog* log = nullptr, std::int32_t region = 0) {
  oe_mergesort(std::span<T>(items), less, log, region);
}

using SortKey = unsigned __int128;

/// Network sort by an integer key below 2^96. Sorts (key, position) tags
/// with branch-free exchanges and then permutes the items, so ties keep
/// their input order. The touch sequence is the same as oe_mergesort's.
template <typename T, typename KeyFn>
void oe_sort_by_key(std::vector<T>& items, KeyFn key, TouchLog* log = nullptr, std::int32_t region = 0) {
  const std::size_t n = items.size();
  if (n > (std::size_t{1} << 32)) throw std::length_error("too many items for a keyed sort");
  std::vector<SortKey> tags(n);
  for (std::size_t i = 0; i < n; ++i) tags[i] = (SortKey(key(items[i])) << 32) | i;
  SortKey* t = tags.data();
  std::uint64_t comparators = 0;
  const bool full = log && log->mode() != TraceMode::Count;
  for_each_oe_comparator(n, [&](std::size_t a, std::size_t b) {
    if (full) log->compare_exchange(region, a, b);
    ++comparators;
    const SortKey x = t[a], y = t[b];
    const bool swap = y < x;
    t[a] = swap ? y : x;
    t[b] = swap ? x : y;
  });
  if (log && !full) log->add_counts(region, 2 * comparators, 2 * comparators);
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::move(items[static_cast<std::size_t>(tags[i] & 0xffffffffu)]));
  items = std::move(out);
}

namespace detail {

inline constexpr std::uint32_t kNoShift = 0xffffffffu;

// Logs one pass of pair touches (a, a + step) for a in [0, n - step).
inline void log_shift_round(TouchLog* log, std::int32_t region, std::size_t n, std::size_t step, bool descending) {
  if (!log || step >= n) return;
  if (log->mode() == TraceMode::Count) {
    log->add_counts(region, 2 * (n - step), 2 * (n - step));
    return;
  }
  for (std::size_t t = 0; t < n - step; ++t) {
    const std::size_t a = descending ? n - step - 1 - t : t;
    log->compare_exchange(region, a, a + step);
  }
}

template <typename T>
void apply_slots(std::vector<T>& items, const std::vector<std::uint32_t>& slot) {
  std::vector<T> out;
  out.reserve(items.size());
  for (auto s : slot) out.push_back(std::move(items[s]));
  items = std::move(out);
}

}  // namespace detail

/// Moves the items with keep(x) to the front in their original order. Each
/// kept item travels left by the number of dropped items before it, one bit
/// of that distance per round of shifts by 2^j, low bits first; no two
/// items ever meet. Dropped items fill the tail in unspecified order.
/// Touches depend on the size only. Returns the number kept.
template <typename T, typename Keep>
std::size_t oe_compact(std::vector<T>& items, Keep keep, TouchLog* log = nullptr, std::int32_t region = 0) {
  const std::size_t n = items.size();
  if (n >= detail::kNoShift) throw std::length_error("too many items for compaction");
  std::vector<std::uint32_t> slot(n), shift(n);
  std::uint32_t dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    slot[i] = static_cast<std::uint32_t>(i);
    if (keep(items[i])) shift[i] = dropped;
    else shift[i] = detail::kNoShift, ++dropped;
  }
  for (std::size_t j = 0; (std::size_t{1} << j) < n; ++j) {
    const std::size_t step = std::size_t{1} << j;
    detail::log_shift_round(log, region, n, step, false);
    for (std::size_t i = step; i < n; ++i) {
      const std::uint32_t d = shift[slot[i]];
      if (d != detail::kNoShift && ((d >> j) & 1)) std::swap(slot[i], slot[i - step]);
    }
  }
  detail::apply_slots(items, slot);
  return n - dropped;
}

/// Inverse of oe_compact: the first `count` items, whose dest(x) values are
/// strictly increasing and below the size, move to slot dest(x), high bits
/// of the distance first. The other items fill the free slots in
/// unspecified order.
template <typename T, typename Dest>
void oe_expand(std::vector<T>& items, std::size_t count, Dest dest, TouchLog* log = nullptr, std::int32_t region = 0) {
  const std::size_t n = items.size();
  if (n >= detail::kNoShift) throw std::length_error("too many items for expansion");
  if (count > n) throw std::invalid_argument("expansion count exceeds the size");
  std::vector<std::uint32_t> slot(n), shift(n, detail::kNoShift);
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    slot[i] = static_cast<std::uint32_t>(i);
    if (i >= count) continue;
    const std::uint64_t d = dest(items[i]);
    if (d >= n || (i > 0 && d <= prev)) throw std::invalid_argument("expansion targets must increase");
    shift[i] = static_cast<std::uint32_t>(d - i);
    prev = d;
  }
  std::size_t rounds = 0;
  while ((std::size_t{1} << rounds) < n) ++rounds;
  for (std::size_t j = rounds; j-- > 0;) {
    const std::size_t step = std::size_t{1} << j;
    detail::log_shift_round(log, region, n, step, true);
    for (std::size_t i = n - step; i-- > 0;) {
      const std::uint32_t d = shift[slot[i]];
      if (d != detail::kNoShift && ((d >> j) & 1)) std::swap(slot[i], slot[i + step]);
    }
  }
  detail::apply_slots(items, slot);
}

/// In-memory data-oblivious sorter for the constant-private-memory setting.
/// Regions are numbered by the caller so different arrays stay distinct in
/// the log.
class NetworkSorter {
 public:
  explicit NetworkSorter(TouchLog* log = nullptr) : log_(log) {}

  template <typename T, typename Less>
  void operator()(std::vector<T>& items, Less less, std::int32_t region) const {
    oe_mergesort(std::span<T>(items), less, log_, region);
  }

  template <typename T, typename KeyFn>
  void by_key(std::vector<T>& items, KeyFn key, std::int32_t region) const {
    oe_sort_by_key(items, key, log_, region);
  }

  template <typename T, typename Keep>
  std::size_t compact(std::vector<T>& items, Keep keep, std::int32_t region) const {
    return oe_compact(items, keep, log_, region);
  }

  template <typename T, typename Dest>
  void expand(std::vector<T>& items, std::size_t count, Dest dest, std::int32_t region) const {
    oe_expand(items, count, dest, log_, region);
  }

  TouchLog* log() const { return log_; }

 private:
  TouchLog* log_;
};

/// Sorts by `key` through the sorter's keyed path when it has one.
template <typename Sorter, typename T, typename KeyFn>
void sort_by_key(const Sorter& sorter, std::vector<T>& items, KeyFn key, std::int32_t region) {
  if constexpr (requires { sorter.by_key(items, key, region); }) {
    sorter.by_key(items, key, region);
  } else {
    sorter(items, [&](const T& a, const T& b) { return key(a) < key(b); }, region);
  }
}

/// Stable compaction of the kept items to the front. Sorters without a
/// compaction network sort by (dropped, position) instead.
template <typename Sorter, typename T, typename Keep>
std::size_t compact_by(const Sorter& sorter, std::vector<T>& items, Keep keep, std::int32_t region) {
  if constexpr (requires { sorter.compact(items, keep, region); }) {
    return sorter.compact(items, keep, region);
  } else {
    std::vector<T*> refs;
    refs.reserve(items.size());
    std::size_t kept = 0;
    for (auto& x : items) refs.push_back(&x), kept += keep(x) ? 1 : 0;
    const T* base = items.data();
    sort_by_key(sorter, refs, [&](T* x) { return (SortKey(!keep(*x)) << 64) | static_cast<std::uint64_t>(x - base); },
                region);
    std::vector<T> out;
    out.reserve(items.size());
    for (T* x : refs) out.push_back(std::move(*x));
    items = std::move(out);
    return kept;
  }
}

}  // namespace horam
