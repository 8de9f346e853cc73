#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "hash.hpp"

namespace horam {

enum class InsertStatus { Ok, StashOverflow };
enum class RemoveStatus { Ok, NotFound };

/// Cells touched by one lookup. The indices depend only on the key and the
/// seeds; every stash slot is always probed.
struct ProbeShape {
  std::uint64_t t1_index = 0;
  std::uint64_t t2_index = 0;
  std::size_t stash_slots = 0;
};

/// Two-table cuckoo hash table with a bounded stash.
///
/// Every key lives at t1[h1(x)], t2[h2(x)] or in the stash. Inserts start
/// at t1 and alternate tables along the eviction chain; a chain longer than
/// c0 * ceil(log2(max_keys + 2)) moves parks the displaced key in the stash.
/// If the stash is full the insert is rolled back and StashOverflow is
/// returned so the owner can rebuild with fresh seeds.
template <typename Value>
class CuckooTable {
 public:
  struct Entry {
    LogicalKey key;
    Value value;
  };
  using Slot = std::optional<Entry>;

  static constexpr unsigned kDefaultEvictionConstant = 8;

  CuckooTable(std::uint64_t m, std::size_t stash_capacity, SeedPair seeds, double epsilon = 0.5,
              unsigned eviction_constant = kDefaultEvictionConstant)
      : hashes_(seeds, m == 0 ? 1 : m),
        t1_(m),
        t2_(m),
        stash_capacity_(stash_capacity),
        eviction_constant_(eviction_constant) {
    if (m == 0) throw ParameterError("cuckoo table needs at least one cell per sub-table");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
    max_keys_ = static_cast<std::size_t>(std::floor((1.0 - epsilon) * static_cast<double>(m) + 1e-9));
    stash_.reserve(stash_capacity);
  }

  std::optional<Value> lookup(LogicalKey x) const {
    last_probe_ = {hashes_.h1(x), hashes_.h2(x), stash_capacity_};
    ++probes_;
    std::optional<Value> found;
    if (const auto& a = t1_[last_probe_.t1_index]; a && a->key == x) found = a->value;
    if (const auto& b = t2_[last_probe_.t2_index]; b && b->key == x) found = b->value;
    for (const auto& e : stash_)
      if (e.key == x) found = e.value;
    return found;
  }

  bool contains(LogicalKey x) const { return lookup(x).has_value(); }

  InsertStatus insert(LogicalKey x, Value v) {
    if (contains(x)) throw DuplicateKey("key already stored");
    if (count_ >= max_keys_) throw CapacityExceeded("cuckoo table is at max_keys");

    // (table, index, previous occupant) for rollback
    std::vector<std::pair<int, std::uint64_t>> moves;
    Entry carry{x, std::move(v)};
    int table = 0;
    const std::size_t limit = eviction_limit();
    for (std::size_t step = 0; step <= limit; ++step) {
      auto& cells = table == 0 ? t1_ : t2_;
      const std::uint64_t idx = table == 0 ? hashes_.h1(carry.key) : hashes_.h2(carry.key);
      moves.emplace_back(table, idx);
      if (!cells[idx]) {
        cells[idx] = std::move(carry);
        ++count_;
        return InsertStatus::Ok;
      }
      std::swap(*cells[idx], carry);
      table ^= 1;
    }
    if (stash_.size() < stash_capacity_) {
      stash_.push_back(std::move(carry));
      ++count_;
      return InsertStatus::Ok;
    }
    // Undo the chain: walk it backwards swapping the carried entry back.
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) {
      auto& cells = it->first == 0 ? t1_ : t2_;
      std::swap(*cells[it->second], carry);
    }
    return InsertStatus::StashOverflow;
  }

  RemoveStatus remove(LogicalKey x) {
    const auto i1 = hashes_.h1(x);
    const auto i2 = hashes_.h2(x);
    if (t1_[i1] && t1_[i1]->key == x) {
      t1_[i1].reset();
    } else if (t2_[i2] && t2_[i2]->key == x) {
      t2_[i2].reset();
    } else {
      auto it = std::find_if(stash_.begin(), stash_.end(), [x](const Entry& e) { return e.key == x; });
      if (it == stash_.end()) return RemoveStatus::NotFound;
      stash_.erase(it);
    }
    --count_;
    return RemoveStatus::Ok;
  }

  /// Full scan: every key at its own hash cell or in the stash, no duplicates,
  /// count consistent.
  bool placement_valid() const {
    std::vector<LogicalKey> keys;
    for (std::uint64_t i = 0; i < t1_.size(); ++i) {
      if (t1_[i]) {
        if (hashes_.h1(t1_[i]->key) != i) return false;
        keys.push_back(t1_[i]->key);
      }
      if (t2_[i]) {
        if (hashes_.h2(t2_[i]->key) != i) return false;
        keys.push_back(t2_[i]->key);
      }
    }
    for (const auto& e : stash_) keys.push_back(e.key);
    if (keys.size() != count_ || stash_.size() > stash_capacity_ || count_ > max_keys_) return false;
    std::sort(keys.begin(), keys.end());
    return std::adjacent_find(keys.begin(), keys.end()) == keys.end();
  }

  /// Places an entry at a given position without running the insertion
  /// procedure. Used when a table is materialised from a precomputed layout.
  void place_raw(int table, std::uint64_t idx, Entry e) {
    auto& cells = table == 0 ? t1_ : t2_;
    if (cells.at(idx)) throw Error("cell already occupied");
    cells[idx] = std::move(e);
    ++count_;
  }
  void stash_raw(Entry e) {
    if (stash_.size() >= stash_capacity_) throw InfeasibleStash("stash full");
    stash_.push_back(std::move(e));
    ++count_;
  }

  const HashPair& hashes() const { return hashes_; }
  std::uint64_t range() const { return t1_.size(); }
  std::size_t cells() const { return 2 * t1_.size(); }
  std::size_t count() const { return count_; }
  std::size_t max_keys() const { return max_keys_; }
  std::size_t stash_capacity() const { return stash_capacity_; }
  std::size_t stash_size() const { return stash_.size(); }
  std::span<const Slot> t1() const { return t1_; }
  std::span<const Slot> t2() const { return t2_; }
  std::span<const Entry> stash() const { return stash_; }
  const ProbeShape& last_probe() const { return last_probe_; }
  std::uint64_t probes() const { return probes_; }
  bool empty() const { return count_ == 0; }

  std::size_t eviction_limit() const {
    const auto lg = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(max_keys_) + 2.0)));
    return eviction_constant_ * lg;
  }

 private:
  HashPair hashes_;
  std::vector<Slot> t1_;
  std::vector<Slot> t2_;
  std::vector<Entry> stash_;
  std::size_t stash_capacity_;
  std::size_t max_keys_ = 0;
  std::size_t count_ = 0;
  unsigned eviction_constant_;
  mutable ProbeShape last_probe_{};
  mutable std::uint64_t probes_ = 0;
};

/// Connected components of the cuckoo graph, vertices = 2m cells,
/// edges = (h1(x), m + h2(x)).
struct ComponentHistogram {
  std::vector<std::size_t> sizes;     ///< edges per nontrivial component
  std::vector<std::size_t> vertices;  ///< vertices per nontrivial component
  std::vector<std::size_t> excess;    ///< cyclomatic number: edges - vertices + 1
  std::size_t total_vertices = 0;

  std::size_t edge_total() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}); }

  /// Keys that cannot be placed in the two tables: gamma(G) - T(G).
  std::size_t min_stash() const {
    std::size_t s = 0;
    for (auto e : excess) s += e > 1 ? e - 1 : 0;
    return s;
  }

  /// Fraction of vertices v whose component has at least k edges.
  double vertex_survival(std::size_t k) const {
    if (total_vertices == 0) return 0.0;
    if (k == 0) return 1.0;
    std::size_t hit = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c)
      if (sizes[c] >= k) hit += vertices[c];
    return static_cast<double>(hit) / static_cast<double>(total_vertices);
  }
};

inline ComponentHistogram component_stats(std::span<const LogicalKey> keys, const HashPair& hashes) {
  const std::uint64_t m = hashes.range();
  std::vector<std::uint64_t> parent(2 * m);
  std::iota(parent.begin(), parent.end(), std::uint64_t{0});
  auto find = [&](std::uint64_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
  edges.reserve(keys.size());
  for (auto x : keys) {
    const auto u = hashes.h1(x);
    const auto w = m + hashes.h2(x);
    edges.emplace_back(u, w);
    parent[find(u)] = find(w);
  }
  std::vector<std::size_t> edge_count(2 * m, 0), vertex_count(2 * m, 0);
  std::vector<char> touched(2 * m, 0);
  for (auto [u, w] : edges) {
    ++edge_count[find(u)];
    touched[u] = touched[w] = 1;
  }
  for (std::uint64_t v = 0; v < 2 * m; ++v)
    if (touched[v]) ++vertex_count[find(v)];
  ComponentHistogram h;
  h.total_vertices = 2 * m;
  for (std::uint64_t v = 0; v < 2 * m; ++v) {
    if (edge_count[v] == 0) continue;
    h.sizes.push_back(edge_count[v]);
    h.vertices.push_back(vertex_count[v]);
    h.excess.push_back(edge_count[v] + 1 - vertex_count[v]);
  }
  return h;
}

}  // namespace horam
