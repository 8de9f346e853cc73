#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "em_sort.hpp"
#include "errors.hpp"
#include "hash.hpp"
#include "oblivious_build.hpp"
#include "oblivious_sort.hpp"
#include "storage_server.hpp"
#include "trace.hpp"

namespace horam {

enum class MemoryMode { Constant, Sublinear };
enum class LevelKind : std::uint8_t { LinearScan, Bucket, Cuckoo };

/// Parameters of the level hierarchy H_k..H_L for n = 2^L cells.
struct OramConfig {
  static constexpr int kDefaultStart = 3;
  static constexpr int kBoundaryConstant = 2;       ///< l = k + ceil(log2 log2 n) + this
  static constexpr double kStashConstant = 2.0;     ///< s = ceil(this * log2 n)
  static constexpr std::size_t kBucketConstant = 3; ///< bucket capacity = this * log2 n
  static constexpr int kRetries = 5;

  std::uint64_t n = 0;
  MemoryMode mode = MemoryMode::Constant;
  double r = 2.0;
  int L = 0;
  int k = 0;
  int l = 0;
  std::size_t s = 0;
  double epsilon = 0.5;
  std::size_t bucket_capacity = 0;
  int retries = kRetries;
  std::size_t em_block = 2;   ///< block size of the external sorter (sublinear mode)
  std::size_t em_memory = 0;  ///< private memory of the external sorter (sublinear mode)

  static OramConfig constant_memory(std::uint64_t n) {
    OramConfig c = base(n);
    c.mode = MemoryMode::Constant;
    c.k = std::min(kDefaultStart, c.L - 1);
    const int loglog = static_cast<int>(std::ceil(std::log2(static_cast<double>(c.L))));
    c.l = std::min(c.L, c.k + loglog + kBoundaryConstant);
    return c;
  }

  /// H_k (2^k ~ n^(1/r) cells) is kept privately; every other level is a
  /// cuckoo table and all of them share one stash.
  static OramConfig sublinear_memory(std::uint64_t n, double r) {
    if (!(r > 1.0)) throw ParameterError("r must exceed 1");
    OramConfig c = base(n);
    c.mode = MemoryMode::Sublinear;
    c.r = r;
    c.k = std::clamp(static_cast<int>(std::ceil(static_cast<double>(c.L) / r)), 1, c.L - 1);
    c.l = c.k;
    c.em_memory = std::max<std::size_t>(std::size_t{8} << c.k, 64);
    return c;
  }

  LevelKind kind(int i) const {
    if (i == k) return LevelKind::LinearScan;
    return i <= l ? LevelKind::Bucket : LevelKind::Cuckoo;
  }

  void validate() const {
    if (n < 4 || !std::has_single_bit(n)) throw ParameterError("n must be a power of two and at least 4");
    if (k < 1 || k >= L || l < k || l > L) throw ParameterError("level bounds out of order");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
    if (mode == MemoryMode::Sublinear) check_tall_cache(em_memory, em_block);
  }

 private:
  static OramConfig base(std::uint64_t n) {
    if (n < 4 || !std::has_single_bit(n)) throw ParameterError("n must be a power of two and at least 4");
    OramConfig c;
    c.n = n;
    c.L = std::countr_zero(n);
    c.s = static_cast<std::size_t>(std::ceil(kStashConstant * c.L));
    c.bucket_capacity = kBucketConstant * static_cast<std::size_t>(c.L);
    return c;
  }
};

/// Plaintext of one server cell.
struct OramCell {
  static constexpr std::uint8_t kOccupied = 1;
  static constexpr std::uint8_t kUsed = 2;
  static constexpr std::size_t kBytes = 18;

  LogicalKey key = 0;
  std::int64_t value = 0;
  std::uint8_t flags = 0;
  std::int8_t level = 0;  ///< owning level, for shared-stash entries

  bool occupied() const { return flags & kOccupied; }
  bool used() const { return flags & kUsed; }
  bool live() const { return occupied() && !used(); }
  bool holds(LogicalKey x) const { return occupied() && !used() && key == x; }

  void encode(std::uint8_t* out) const {
    std::memcpy(out, &key, 8);
    std::memcpy(out + 8, &value, 8);
    out[16] = flags;
    out[17] = static_cast<std::uint8_t>(level);
  }
  static OramCell decode(const std::uint8_t* in) {
    OramCell c;
    std::memcpy(&c.key, in, 8);
    std::memcpy(&c.value, in + 8, 8);
    c.flags = in[16];
    c.level = static_cast<std::int8_t>(in[17]);
    return c;
  }
};

enum class StepKind : std::uint8_t { Scan, Counter, Bucket, Cuckoo, SharedStash, Insert, Empty, Rebuild, Retry };

inline const char* step_name(StepKind k) {
  switch (k) {
    case StepKind::Scan: return "scan";
    case StepKind::Counter: return "counter";
    case StepKind::Bucket: return "bucket";
    case StepKind::Cuckoo: return "cuckoo";
    case StepKind::SharedStash: return "shared-stash";
    case StepKind::Insert: return "insert";
    case StepKind::Empty: return "empty";
    case StepKind::Rebuild: return "rebuild";
    case StepKind::Retry: return "retry";
  }
  return "?";
}

/// One entry of the structural trace: what was touched at which level and
/// how many cells, without the cell indices.
struct StructStep {
  std::uint64_t access = 0;
  StepKind kind = StepKind::Scan;
  std::int32_t level = 0;
  std::uint64_t count = 0;
  bool operator==(const StructStep&) const = default;
};

using StructuralTrace = std::vector<StructStep>;

inline void write_structural_trace(std::ostream& os, const StructuralTrace& t) {
  for (const auto& s : t) os << s.access << ' ' << step_name(s.kind) << ' ' << s.level << ' ' << s.count << '\n';
}

inline std::string structural_trace_text(const StructuralTrace& t) {
  std::ostringstream os;
  write_structural_trace(os, t);
  return os.str();
}

/// Probed cuckoo cells of one level during one epoch.
struct ProbeSample {
  std::int32_t level = 0;
  std::uint64_t epoch = 0;
  std::uint64_t cells = 0;  ///< 2m
  std::vector<std::uint64_t> probes;
};

struct OramOptions {
  std::uint64_t seed = 1;
  TraceMode trace_mode = TraceMode::Count;
  bool record_structure = false;  ///< keep the full structural trace
  bool audit = false;             ///< keep per-epoch lookup-key logs
  bool record_probes = false;     ///< keep cuckoo probe samples
};

struct OramStats {
  std::uint64_t accesses = 0;
  std::uint64_t access_touches = 0;  ///< server touches of the access phase
  std::uint64_t rebuilds = 0;
  std::uint64_t full_rebuilds = 0;  ///< H_L rebuilt with p_L reaching 2^L
  std::uint64_t retries = 0;
  std::uint64_t duplicate_probes = 0;
  std::map<int, std::uint64_t> rebuilds_per_level;
  std::map<std::size_t, std::uint64_t> stash_histogram;  ///< stash size after each cuckoo build
};

/// Hierarchical ORAM client over a simulated server.
class OramClient {
 public:
  using Value = std::int64_t;

  static constexpr std::int32_t kCounterRegion = 100;
  static constexpr std::int32_t kSharedStashRegion = 101;
  static constexpr std::int32_t kScratchBase = 1000;

  OramClient(OramConfig config, std::span<const Value> initial, OramOptions options = {})
      : cfg_(config),
        opt_(options),
        seeds_(options.seed),
        cipher_(mix64(options.seed ^ 0x5bd1e995ULL), OramCell::kBytes),
        store_(cipher_.blob_len(), options.trace_mode),
        network_(&store_.log()) {
    cfg_.validate();
    if (initial.size() != cfg_.n) throw ParameterError("initial contents must have n values");
    if (cfg_.mode == MemoryMode::Sublinear) em_.emplace(cfg_.em_block, cfg_.em_memory, &store_.log());
    levels_.resize(cfg_.L + 1);
    for (int i = cfg_.k; i <= cfg_.L; ++i) {
      auto& lv = levels_[i];
      lv.kind = cfg_.kind(i);
      lv.index = i;
      if (lv.kind == LevelKind::LinearScan) lv.cells = std::size_t{1} << i;
      if (lv.kind == LevelKind::Bucket) lv.cells = (std::size_t{2} << i) * cfg_.bucket_capacity;
      if (lv.kind == LevelKind::Cuckoo) lv.cells = 2 * table_m(i) + (shared_stash() ? 0 : cfg_.s);
      if (i == cfg_.k && private_top()) continue;
      store_.create_level(i, lv.cells);
    }
    if (private_top()) top_.assign(levels_[cfg_.k].cells, OramCell{});
    if (shared_stash()) {
      store_.create_level(kSharedStashRegion, cfg_.s);
      stash_.assign(cfg_.s, OramCell{});
    }
    if (!private_counters()) store_.create_level(kCounterRegion, static_cast<std::size_t>(cfg_.L) + 1);

    // Level k starts empty, levels k+1..L-1 hold dummies only, H_L holds
    // every initial value.
    for (int i = cfg_.k; i <= cfg_.L; ++i) {
      if (i == cfg_.k) {
        clear_top();
        continue;
      }
      std::vector<BuildItem<Value>> payload;
      if (i == cfg_.L)
        for (std::uint64_t a = 0; a < cfg_.n; ++a) payload.push_back({static_cast<LogicalKey>(a + 1), initial[a]});
      build_level(i, payload, i < cfg_.L);
    }
    if (shared_stash()) write_shared_stash();
    for (int i = cfg_.k; i <= cfg_.L; ++i)
      if (!private_counters()) write_counter(i);
  }

  const OramConfig& config() const { return cfg_; }
  ServerStore& server() { return store_; }
  const ServerStore& server() const { return store_; }
  const OramStats& stats() const { return stats_; }
  const StructuralTrace& structural_trace() const { return trace_; }
  std::uint64_t structural_digest() const { return struct_digest_.value(); }
  const std::vector<ProbeSample>& probe_samples() const { return samples_; }
  std::uint64_t potential(int i) const { return levels_.at(i).p; }
  std::uint64_t epoch(int i) const { return levels_.at(i).epoch; }
  std::uint64_t level_accesses(int i) const { return levels_.at(i).d; }

  Value read(LogicalKey x) { return access(x, std::nullopt); }
  /// Returns the value held before the write.
  Value write(LogicalKey x, Value v) { return access(x, v); }

  Value access(LogicalKey x, std::optional<Value> new_value) {
    if (x < 1 || static_cast<std::uint64_t>(x) > cfg_.n) throw KeyOutOfRange("address out of range");
    const std::uint64_t before = store_.log().size();
    ++stats_.accesses;
    bool found = false;
    Value value = 0;

    // H_k: exhaustive scan.
    {
      auto& cells = private_top() ? top_ : scratch_cells_;
      const std::size_t cap = levels_[cfg_.k].cells;
      if (!private_top()) {
        scratch_cells_.resize(cap);
        for (std::size_t j = 0; j < cap; ++j) cells[j] = load(cfg_.k, j);
      }
      for (std::size_t j = 0; j < cap; ++j)
        if (cells[j].holds(x)) {
          found = true;
          value = cells[j].value;
          cells[j].flags |= OramCell::kUsed;
        }
      if (!private_top())
        for (std::size_t j = 0; j < cap; ++j) save(cfg_.k, j, cells[j]);
      step(StepKind::Scan, cfg_.k, private_top() ? 0 : cap);
    }
    if (shared_stash()) {
      for (std::size_t j = 0; j < cfg_.s; ++j) stash_[j] = load(kSharedStashRegion, j);
      step(StepKind::SharedStash, 0, cfg_.s);
    }

    for (int i = cfg_.k + 1; i <= cfg_.L; ++i) {
      auto& lv = levels_[i];
      const std::uint64_t d = lv.d++;
      if (!private_counters()) {
        load(kCounterRegion, static_cast<std::uint64_t>(i));
        write_counter(i);
        step(StepKind::Counter, i, 2);
      }
      const LogicalKey key = found ? -static_cast<LogicalKey>(d + 1) : x;
      note_lookup(i, key);
      std::optional<Value> hit = lv.kind == LevelKind::Bucket ? probe_bucket(lv, key) : probe_cuckoo(lv, key);
      if (!hit) {
        if (key < 0) throw InternalNotFound("dummy missing from level " + std::to_string(i));
        continue;
      }
      if (!found) {
        found = true;
        value = *hit;
      }
    }
    if (!found) throw InternalNotFound("address " + std::to_string(x) + " not in the hierarchy");
    if (shared_stash()) write_shared_stash();

    // Insert the current value at the next free slot of H_k.
    auto& top = levels_[cfg_.k];
    const OramCell fresh{x, new_value.value_or(value), OramCell::kOccupied, static_cast<std::int8_t>(cfg_.k)};
    if (private_top()) top_[top.p] = fresh;
    else save(cfg_.k, top.p, fresh);
    step(StepKind::Insert, cfg_.k, private_top() ? 0 : 1);
    ++top.p;
    stats_.access_touches += store_.log().size() - before;
    cascade();
    ++access_no_;
    return value;
  }

 private:
  struct Level {
    LevelKind kind = LevelKind::LinearScan;
    int index = 0;
    std::size_t cells = 0;
    HashPair hashes;
    std::uint64_t epoch = 0;
    std::uint64_t d = 0;  ///< lookups since the level was built
    std::uint64_t p = 0;  ///< potential
    std::unordered_set<LogicalKey> lookups;
    std::size_t sample = SIZE_MAX;
  };

  bool private_top() const { return cfg_.mode == MemoryMode::Sublinear; }
  bool private_counters() const { return cfg_.mode == MemoryMode::Sublinear; }
  bool shared_stash() const { return cfg_.mode == MemoryMode::Sublinear; }
  std::uint64_t table_m(int i) const { return std::uint64_t{8} << i; }

  OramCell load(std::int32_t region, std::uint64_t idx) {
    auto blob = store_.read_cell(region, idx);
    cipher_.decrypt_into(blob, plain_);
    return OramCell::decode(plain_.data());
  }
  void save(std::int32_t region, std::uint64_t idx, const OramCell& c) {
    c.encode(plain_.data());
    cipher_.encrypt_into(plain_, store_.write_span(region, idx));
  }
  void write_counter(int i) {
    save(kCounterRegion, static_cast<std::uint64_t>(i), OramCell{0, static_cast<std::int64_t>(levels_[i].d), 0, 0});
  }
  void write_shared_stash() {
    for (std::size_t j = 0; j < cfg_.s; ++j) save(kSharedStashRegion, j, stash_[j]);
  }
  void clear_top() {
    if (private_top()) std::fill(top_.begin(), top_.end(), OramCell{});
    else
      for (std::size_t j = 0; j < levels_[cfg_.k].cells; ++j) save(cfg_.k, j, OramCell{});
  }

  void step(StepKind kind, std::int32_t level, std::uint64_t count) {
    StructStep s{access_no_, kind, level, count};
    struct_digest_.mix(s.access);
    struct_digest_.mix((static_cast<std::uint64_t>(kind) << 32) ^ static_cast<std::uint32_t>(level));
    struct_digest_.mix(count);
    if (opt_.record_structure) trace_.push_back(s);
  }

  void note_lookup(int i, LogicalKey key) {
    if (!opt_.audit) return;
    if (!levels_[i].lookups.insert(key).second) ++stats_.duplicate_probes;
  }

  std::optional<Value> probe_bucket(Level& lv, LogicalKey key) {
    const std::size_t cap = cfg_.bucket_capacity;
    const std::uint64_t b = lv.hashes.h1(key);
    std::optional<Value> hit;
    scratch_cells_.resize(cap);
    for (std::size_t j = 0; j < cap; ++j) scratch_cells_[j] = load(lv.index, b * cap + j);
    for (auto& c : scratch_cells_)
      if (c.holds(key)) {
        hit = c.value;
        c.flags |= OramCell::kUsed;
      }
    for (std::size_t j = 0; j < cap; ++j) save(lv.index, b * cap + j, scratch_cells_[j]);
    step(StepKind::Bucket, lv.index, 2 * cap);
    return hit;
  }

  std::optional<Value> probe_cuckoo(Level& lv, LogicalKey key) {
    const std::uint64_t m = table_m(lv.index);
    const std::uint64_t c1 = lv.hashes.h1(key), c2 = m + lv.hashes.h2(key);
    if (opt_.record_probes) {
      auto& smp = samples_[lv.sample];
      smp.probes.push_back(c1);
      smp.probes.push_back(c2);
    }
    std::optional<Value> hit;
    auto visit = [&](OramCell& c) {
      if (c.holds(key)) {
        hit = c.value;
        c.flags |= OramCell::kUsed;
      }
    };
    OramCell a = load(lv.index, c1), b = load(lv.index, c2);
    visit(a);
    visit(b);
    std::size_t touched = 4;
    if (!shared_stash()) {
      scratch_cells_.resize(cfg_.s);
      for (std::size_t j = 0; j < cfg_.s; ++j) scratch_cells_[j] = load(lv.index, 2 * m + j);
      for (auto& c : scratch_cells_) visit(c);
    } else {
      for (auto& c : stash_)
        if (c.level == lv.index) visit(c);
    }
    save(lv.index, c1, a);
    save(lv.index, c2, b);
    if (!shared_stash()) {
      for (std::size_t j = 0; j < cfg_.s; ++j) save(lv.index, 2 * m + j, scratch_cells_[j]);
      touched += 2 * cfg_.s;
    }
    step(StepKind::Cuckoo, lv.index, touched);
    return hit;
  }

  // Runs f with the sorter of the current mode.
  template <typename F>
  decltype(auto) with_sorter(F&& f) {
    if (em_) return f(*em_);
    return f(network_);
  }

  MrMemory scratch(int level) { return {&store_.log(), kScratchBase + 16 * level}; }

  /// Rebuilds level i from `payload` (unused real items) padded to 2^i
  /// entries, plus the lookup dummies -1..-2^i. With an empty payload and
  /// `dummies_only`, only the lookup dummies are stored.
  void build_level(int i, std::span<const BuildItem<Value>> payload, bool dummies_only = false) {
    auto& lv = levels_[i];
    const std::uint64_t D = std::uint64_t{1} << i;
    std::vector<BuildItem<Value>> items;
    items.reserve(2 * D);
    if (!dummies_only) {
      if (payload.size() > D) throw InternalNotFound("level payload exceeds its capacity");
      for (std::uint64_t t = 0; t < D; ++t)
        items.push_back(t < payload.size() ? payload[t] : BuildItem<Value>{-static_cast<LogicalKey>(D + t + 1), 0});
    }
    for (std::uint64_t t = 0; t < D; ++t) items.push_back({-static_cast<LogicalKey>(t + 1), 0});

    if (shared_stash())
      for (auto& c : stash_)
        if (c.level == i) c = OramCell{};

    for (int attempt = 0;; ++attempt) {
      lv.hashes = HashPair(seeds_.next_pair(), lv.kind == LevelKind::Bucket ? (std::uint64_t{2} << i) : table_m(i));
      try {
        if (lv.kind == LevelKind::Bucket) write_bucket_level(lv, items);
        else write_cuckoo_level(lv, items);
        break;
      } catch (const CeilingViolation&) {
      } catch (const InfeasibleStash&) {
      } catch (const BuildFailure&) {
      }
      ++stats_.retries;
      step(StepKind::Retry, i, 0);
      if (attempt + 1 >= cfg_.retries) throw BuildFailure("level " + std::to_string(i) + " failed to build");
    }
    ++lv.epoch;
    lv.d = 0;
    lv.lookups.clear();
    if (opt_.record_probes && lv.kind == LevelKind::Cuckoo) {
      lv.sample = samples_.size();
      samples_.push_back({i, lv.epoch, 2 * table_m(i), {}});
    }
    ++stats_.rebuilds;
    ++stats_.rebuilds_per_level[i];
    step(StepKind::Rebuild, i, items.size());
  }

  void write_bucket_level(Level& lv, std::span<const BuildItem<Value>> items) {
    auto cells = with_sorter([&](auto& sorter) {
      return oblivious_bucket_build<Value>(items, lv.hashes, cfg_.bucket_capacity, sorter, scratch(lv.index));
    });
    for (std::size_t j = 0; j < cells.size(); ++j) {
      OramCell c;
      if (cells[j]) c = {cells[j]->key, cells[j]->value, OramCell::kOccupied, static_cast<std::int8_t>(lv.index)};
      save(lv.index, j, c);
    }
  }

  void write_cuckoo_level(Level& lv, std::span<const BuildItem<Value>> items) {
    const std::uint64_t m = table_m(lv.index);
    auto table = with_sorter([&](auto& sorter) {
      return oblivious_cuckoo_build<Value>(items, lv.hashes, cfg_.s, sorter, scratch(lv.index), {}, cfg_.epsilon);
    });
    const auto stash = table.stash();
    if (shared_stash()) {
      std::size_t free_slots = 0;
      for (const auto& c : stash_) free_slots += !c.occupied();
      if (stash.size() > free_slots) throw InfeasibleStash("shared stash full");
    }
    auto as_cell = [&](const auto& slot) {
      OramCell c;
      if (slot) c = {slot->key, slot->value, OramCell::kOccupied, static_cast<std::int8_t>(lv.index)};
      return c;
    };
    for (std::uint64_t j = 0; j < m; ++j) save(lv.index, j, as_cell(table.t1()[j]));
    for (std::uint64_t j = 0; j < m; ++j) save(lv.index, m + j, as_cell(table.t2()[j]));
    if (shared_stash()) {
      std::size_t next = 0;
      for (const auto& e : stash) {
        while (stash_[next].occupied()) ++next;
        stash_[next] = {e.key, e.value, OramCell::kOccupied, static_cast<std::int8_t>(lv.index)};
      }
    } else {
      for (std::size_t j = 0; j < cfg_.s; ++j) {
        OramCell c;
        if (j < stash.size()) c = {stash[j].key, stash[j].value, OramCell::kOccupied, static_cast<std::int8_t>(lv.index)};
        save(lv.index, 2 * m + j, c);
      }
    }
    ++stats_.stash_histogram[stash.size()];
  }

  // Reads every cell of a level (and its shared-stash entries) into `out`.
  void collect(int i, std::vector<OramCell>& out) {
    const auto& lv = levels_[i];
    if (i == cfg_.k && private_top()) {
      out.insert(out.end(), top_.begin(), top_.end());
      return;
    }
    for (std::size_t j = 0; j < lv.cells; ++j) out.push_back(load(i, j));
    if (shared_stash())
      for (const auto& c : stash_)
        if (c.level == i && c.occupied()) out.push_back(c);
  }

  void cascade() {
    const int k = cfg_.k, L = cfg_.L;
    if (levels_[k].p < (std::uint64_t{1} << k)) return;
    std::vector<int> emptied;
    int j = k;
    while (j < L && levels_[j].p == (std::uint64_t{1} << j)) {
      emptied.push_back(j);
      levels_[j].p = 0;
      levels_[j + 1].p += std::uint64_t{1} << j;
      ++j;
    }
    const int dest = j;
    bool full = false;
    if (dest == L && levels_[L].p >= (std::uint64_t{1} << L)) {
      levels_[L].p = 0;
      full = true;
    }
    // Gather, then compact the unused real items to the front.
    std::vector<OramCell> cells;
    for (int i : emptied) collect(i, cells);
    collect(dest, cells);
    for (int i : emptied) step(StepKind::Empty, i, levels_[i].cells);
    if (shared_stash())
      for (auto& c : stash_)
        if (c.level >= k && c.level <= dest) c = OramCell{};
    struct Slot {
      bool real = false;
      BuildItem<Value> item{};
    };
    const std::uint64_t P = std::uint64_t{1} << dest;
    std::vector<Slot> slots;
    slots.reserve(std::max<std::size_t>(cells.size(), P));
    for (const auto& c : cells) slots.push_back({c.live() && c.key > 0, {c.key, c.value}});
    while (slots.size() < P) slots.push_back({});
    auto mem = scratch(dest);
    for (std::size_t t = 0; t < slots.size(); ++t) store_.note(mem.region_base + 7, t, TouchKind::Write);
    with_sorter([&](auto& sorter) {
      compact_by(sorter, slots, [](const Slot& x) { return x.real; }, mem.region_base + 7);
    });
    std::vector<BuildItem<Value>> payload;
    for (std::uint64_t t = 0; t < P; ++t) {
      store_.note(mem.region_base + 7, t, TouchKind::Read);
      if (slots[t].real) payload.push_back(slots[t].item);
    }
    if (P < slots.size() && slots[P].real) throw InternalNotFound("more live items than the destination holds");

    build_level(dest, payload);
    for (int i : emptied) {
      if (i == k) {
        clear_top();
        step(StepKind::Rebuild, k, 0);
      } else {
        build_level(i, {}, true);
      }
    }
    if (shared_stash()) write_shared_stash();
    if (full) ++stats_.full_rebuilds;
  }

  OramConfig cfg_;
  OramOptions opt_;
  SeedSource seeds_;
  CipherBox cipher_;
  ServerStore store_;
  NetworkSorter network_;
  std::optional<ExternalSorter> em_;
  std::vector<Level> levels_;
  std::vector<OramCell> top_;
  std::vector<OramCell> stash_;
  std::vector<OramCell> scratch_cells_;
  std::vector<std::uint8_t> plain_ = std::vector<std::uint8_t>(OramCell::kBytes);
  std::uint64_t access_no_ = 0;
  StructuralTrace trace_;
  SequenceDigest struct_digest_;
  std::vector<ProbeSample> samples_;
  OramStats stats_;
};

}  // namespace horam
