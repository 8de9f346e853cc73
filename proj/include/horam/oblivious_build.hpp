#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bfs_cuckoo.hpp"
#include "cuckoo_table.hpp"
#include "errors.hpp"
#include "mapreduce.hpp"

namespace horam {

/// A key with its value and target cell; cell == kStashCell for stash keys.
template <typename V>
struct Placement {
  std::uint64_t cell = 0;
  LogicalKey key = 0;
  V value{};
};

inline constexpr std::uint64_t kStashCell = std::numeric_limits<std::uint64_t>::max();

namespace detail {

// Placements sorted by cell, stash entries ranked after the cells, then
// expanded so each lands on its own slot.
template <typename V, typename Sorter>
CuckooTable<V> convert_by_expansion(std::span<const Placement<V>> placements, const HashPair& hashes,
                                    std::size_t stash_capacity, const Sorter& sorter, std::int32_t region,
                                    MrMemory mem, double epsilon) {
  struct Slot {
    std::uint64_t dest = 0;
    bool occupied = false;
    LogicalKey key = 0;
    V value{};
  };
  const std::uint64_t cells = 2 * hashes.range();
  const std::size_t total = cells + stash_capacity;
  auto touch = [&](std::uint64_t i, TouchKind k) {
    if (mem.log) mem.log->record(region, i, k);
  };
  if (placements.size() > total) throw InfeasibleStash("more placements than slots");
  std::size_t stashed = 0;
  std::vector<Slot> slots;
  slots.reserve(total);
  for (const auto& p : placements) {
    const bool to_stash = p.cell == kStashCell;
    if (!to_stash && p.cell >= cells) throw ParameterError("placement cell out of range");
    stashed += to_stash;
    slots.push_back({to_stash ? cells : p.cell, true, p.key, p.value});
  }
  if (stashed > stash_capacity) throw InfeasibleStash("assignment stash exceeds capacity");
  for (std::size_t j = 0; j < slots.size(); ++j) touch(j, TouchKind::Write);
  sort_by_key(sorter, slots, [](const Slot& t) { return SortKey(t.dest); }, region);
  std::uint64_t rank = 0;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    touch(j, TouchKind::Read);
    auto& t = slots[j];
    if (t.dest == cells) t.dest += rank++;
    if (j > 0 && t.dest == slots[j - 1].dest) throw ParameterError("two placements share a cell");
    touch(j, TouchKind::Write);
  }
  const std::size_t count = slots.size();
  for (std::size_t j = count; j < total; ++j) touch(j, TouchKind::Write);
  slots.resize(total);
  sorter.expand(slots, count, [](const Slot& t) { return t.dest; }, region);

  CuckooTable<V> table(hashes.range(), stash_capacity, hashes.seeds(), epsilon);
  for (std::uint64_t i = 0; i < total; ++i) {
    touch(i, TouchKind::Read);
    auto& t = slots[i];
    if (!t.occupied) continue;
    typename CuckooTable<V>::Entry e{t.key, std::move(t.value)};
    if (i < cells) table.place_raw(i < hashes.range() ? 0 : 1, i % hashes.range(), std::move(e));
    else table.stash_raw(std::move(e));
  }
  return table;
}

}  // namespace detail

/// Turns a cell assignment into a standard table layout with a fixed touch
/// sequence. With a compaction-capable sorter the placements are sorted by
/// cell and expanded onto their slots. Otherwise every cell and placement
/// gets a tuple, sorted by (cell, tag) so each placement sits right before
/// its cell, a scan copies placements into the following cell tuple, and a
/// sort brings cells back in order followed by the stash. Only
/// |placements|, the cell count and s determine the touches.
template <typename V, typename Sorter>
CuckooTable<V> convert_assignment_to_table(std::span<const Placement<V>> placements, const HashPair& hashes,
                                           std::size_t stash_capacity, const Sorter& sorter, MrMemory mem = {},
                                           double epsilon = 0.5) {
  struct Tuple {
    std::uint64_t index = 0;
    std::uint8_t tag = 0;  // 0 = placement, 1 = cell or stash slot
    bool occupied = false;
    LogicalKey key = 0;
    V value{};
  };
  const std::uint64_t cells = 2 * hashes.range();
  const std::uint64_t stash_index = cells;
  const std::int32_t region = mem.region_base + 4;
  auto touch = [&](std::uint64_t i, TouchKind k) {
    if (mem.log) mem.log->record(region, i, k);
  };

  if constexpr (requires(std::vector<Tuple>& v) { sorter.expand(v, 0, [](const Tuple&) { return 0; }, 0); }) {
    return detail::convert_by_expansion<V>(placements, hashes, stash_capacity, sorter, region, mem, epsilon);
  }

  std::size_t stashed = 0;
  std::vector<Tuple> tuples;
  tuples.reserve(placements.size() + cells + stash_capacity);
  for (const auto& p : placements) {
    const bool to_stash = p.cell == kStashCell;
    if (!to_stash && p.cell >= cells) throw ParameterError("placement cell out of range");
    stashed += to_stash;
    tuples.push_back({to_stash ? stash_index : p.cell, 0, true, p.key, p.value});
  }
  if (stashed > stash_capacity) throw InfeasibleStash("assignment stash exceeds capacity");
  for (std::uint64_t i = 0; i < cells; ++i) tuples.push_back({i, 1, false, 0, V{}});
  for (std::size_t j = 0; j < stash_capacity; ++j) tuples.push_back({stash_index, 1, false, 0, V{}});
  for (std::size_t j = 0; j < tuples.size(); ++j) touch(j, TouchKind::Write);

  sort_by_key(sorter, tuples, [](const Tuple& t) { return (SortKey(t.index) << 1) | t.tag; }, region);

  // Copy each cell placement into its cell tuple; stash placements stay put.
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    touch(j, TouchKind::Read);
    auto& t = tuples[j];
    if (j > 0 && t.tag == 1 && t.index < stash_index) {
      const auto& prev = tuples[j - 1];
      if (prev.tag == 0 && prev.index == t.index) {
        t.occupied = true;
        t.key = prev.key;
        t.value = prev.value;
      }
    }
    touch(j, TouchKind::Write);
  }

  // Cells in order, then real stash placements, then empty stash slots,
  // then consumed placements.
  auto group = [&](const Tuple& t) {
    if (t.index < stash_index) return t.tag == 1 ? 0 : 3;
    return t.tag == 0 ? 1 : 2;
  };
  sort_by_key(sorter, tuples, [&](const Tuple& t) { return (SortKey(group(t)) << 64) | t.index; }, region);

  CuckooTable<V> table(hashes.range(), stash_capacity, hashes.seeds(), epsilon);
  for (std::uint64_t i = 0; i < cells + stash_capacity; ++i) {
    touch(i, TouchKind::Read);
    const auto& t = tuples[i];
    if (!t.occupied) continue;
    typename CuckooTable<V>::Entry e{t.key, t.value};
    if (i < cells) table.place_raw(i < hashes.range() ? 0 : 1, i % hashes.range(), std::move(e));
    else table.stash_raw(std::move(e));
  }
  return table;
}

/// Assignment of bare keys; each key is stored as its own value.
template <typename Sorter>
CuckooTable<LogicalKey> convert_assignment_to_table(const Assignment& a, const HashPair& hashes,
                                                    std::size_t stash_capacity, const Sorter& sorter,
                                                    MrMemory mem = {}) {
  std::vector<Placement<LogicalKey>> ps;
  for (auto [cell, key] : a.pairs) ps.push_back({cell, key, key});
  for (auto key : a.stash_keys) ps.push_back({kStashCell, key, key});
  return convert_assignment_to_table<LogicalKey>(std::span<const Placement<LogicalKey>>(ps), hashes, stash_capacity,
                                                 sorter, mem);
}

template <typename V>
struct BuildItem {
  LogicalKey key = 0;
  V value{};
};

/// Data-oblivious cuckoo table construction: the BFS assignment under the
/// oblivious MapReduce simulation, a sort joining the assignment with the
/// values by edge id, and the layout conversion. Throws InfeasibleStash or
/// BuildFailure when the seeds do not admit a table; the caller reseeds.
template <typename V, typename Sorter>
CuckooTable<V> oblivious_cuckoo_build(std::span<const BuildItem<V>> items, const HashPair& hashes,
                                      std::size_t stash_capacity, const Sorter& sorter, MrMemory mem = {},
                                      BfsSchedule schedule = {}, double epsilon = 0.5) {
  const std::size_t n = items.size();
  if (n == 0) {
    std::vector<Placement<V>> none;
    return convert_assignment_to_table<V>(std::span<const Placement<V>>(none), hashes, stash_capacity, sorter, mem,
                                          epsilon);
  }
  if (schedule.rounds == 0) schedule = BfsSchedule::for_keys(n);
  std::vector<LogicalKey> keys(n);
  for (std::size_t j = 0; j < n; ++j) keys[j] = items[j].key;
  BfsCuckoo alg(hashes.range(), schedule);
  auto input = alg.initial_records(keys, hashes);
  if (mem.log)
    for (std::size_t j = 0; j < n; ++j) {
      mem.log->record(mem.region_base + 5, j, TouchKind::Read);
      mem.log->record(mem.region_base, 2 * j, TouchKind::Write);
      mem.log->record(mem.region_base, 2 * j + 1, TouchKind::Write);
    }
  auto res = run_oblivious(alg, input, sorter, mem);
  // Validates the run; the assignment itself is rebuilt below with values.
  (void)detail::assignment_from_finals(alg, res.finals, keys, res.leftover, stash_capacity);

  std::vector<BfsRecord> finals = std::move(res.finals);
  sort_by_key(sorter, finals, [](const BfsRecord& f) { return SortKey(f.edge); }, mem.region_base + 5);
  std::vector<Placement<V>> placements(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (mem.log) {
      mem.log->record(mem.region_base + 5, j, TouchKind::Read);
      mem.log->record(mem.region_base + 5, j, TouchKind::Write);
    }
    const auto& f = finals[j];
    placements[j] = {f.kind == BfsKind::Stash ? kStashCell : alg.cell_of(f.target), items[f.edge].key, items[f.edge].value};
  }
  return convert_assignment_to_table<V>(std::span<const Placement<V>>(placements), hashes, stash_capacity, sorter, mem,
                                        epsilon);
}

/// Bucket table with `buckets` buckets of `capacity` slots, item x in
/// bucket h1(x). With a compaction-capable sorter the items are sorted by
/// bucket, ranked and expanded onto their slots. Otherwise items and
/// per-bucket filler slots are sorted by (bucket, tag), a scan ranks entries
/// within their bucket, and a second sort keeps the first `capacity`
/// entries of every bucket in bucket order. Throws BuildFailure if some
/// bucket overflows; the caller reseeds.
template <typename V, typename Sorter>
std::vector<std::optional<BuildItem<V>>> oblivious_bucket_build(std::span<const BuildItem<V>> items,
                                                                const HashPair& hashes, std::size_t capacity,
                                                                const Sorter& sorter, MrMemory mem = {}) {
  struct Tuple {
    std::uint64_t bucket = 0;
    std::uint8_t tag = 0;  // 0 = item, 1 = filler
    bool keep = false;
    std::uint32_t rank = 0;
    BuildItem<V> item{};
  };
  const std::uint64_t buckets = hashes.range();
  const std::int32_t region = mem.region_base + 6;
  auto touch = [&](std::uint64_t i, TouchKind k) {
    if (mem.log) mem.log->record(region, i, k);
  };
  if constexpr (requires(std::vector<Tuple>& v) { sorter.expand(v, 0, [](const Tuple&) { return 0; }, 0); }) {
    // Sort the items alone, rank them inside their bucket and expand onto
    // slot bucket * capacity + rank.
    const std::size_t total = buckets * capacity;
    if (items.size() > total) throw BuildFailure("bucket overflow");
    std::vector<Tuple> slots;
    slots.reserve(total);
    for (const auto& it : items) slots.push_back({hashes.h1(it.key), 0, true, 0, it});
    for (std::size_t j = 0; j < slots.size(); ++j) touch(j, TouchKind::Write);
    sort_by_key(sorter, slots, [](const Tuple& t) { return SortKey(t.bucket); }, region);
    bool overflow = false;
    std::uint32_t rank = 0;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      touch(j, TouchKind::Read);
      rank = (j > 0 && slots[j - 1].bucket == slots[j].bucket) ? rank + 1 : 0;
      slots[j].rank = rank;
      overflow |= rank >= capacity;
      touch(j, TouchKind::Write);
    }
    if (overflow) throw BuildFailure("bucket overflow");
    const std::size_t count = slots.size();
    for (std::size_t j = count; j < total; ++j) touch(j, TouchKind::Write);
    slots.resize(total);
    sorter.expand(slots, count, [&](const Tuple& t) { return t.bucket * capacity + t.rank; }, region);
    std::vector<std::optional<BuildItem<V>>> cells(total);
    for (std::size_t j = 0; j < total; ++j) {
      touch(j, TouchKind::Read);
      if (slots[j].keep) cells[j] = std::move(slots[j].item);
    }
    return cells;
  }

  std::vector<Tuple> tuples;
  tuples.reserve(items.size() + buckets * capacity);
  for (const auto& it : items) tuples.push_back({hashes.h1(it.key), 0, false, 0, it});
  for (std::uint64_t b = 0; b < buckets; ++b)
    for (std::size_t c = 0; c < capacity; ++c) tuples.push_back({b, 1, false, 0, {}});
  for (std::size_t j = 0; j < tuples.size(); ++j) touch(j, TouchKind::Write);

  sort_by_key(sorter, tuples, [](const Tuple& t) { return (SortKey(t.bucket) << 1) | t.tag; }, region);
  bool overflow = false;
  std::uint32_t rank = 0;
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    touch(j, TouchKind::Read);
    auto& t = tuples[j];
    rank = (j > 0 && tuples[j - 1].bucket == t.bucket) ? rank + 1 : 0;
    t.rank = rank;
    t.keep = rank < capacity;
    overflow |= t.tag == 0 && !t.keep;
    touch(j, TouchKind::Write);
  }
  sort_by_key(sorter, tuples,
              [](const Tuple& t) { return (SortKey(!t.keep) << 95) | (SortKey(t.bucket) << 32) | t.rank; }, region);
  if (overflow) throw BuildFailure("bucket overflow");
  std::vector<std::optional<BuildItem<V>>> cells(buckets * capacity);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    touch(j, TouchKind::Read);
    if (tuples[j].tag == 0) cells[j] = tuples[j].item;
  }
  return cells;
}

}  // namespace horam
