#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "cuckoo_table.hpp"
#include "errors.hpp"
#include "hash.hpp"
#include "mapreduce.hpp"

namespace horam {

/// Vertex and edge ids inside one BFS run.
using BfsId = std::uint32_t;
inline constexpr BfsId kNone = std::numeric_limits<BfsId>::max();

/// BFS label of a cuckoo-graph vertex: the smallest vertex id known in its
/// component, the distance to it, and the tree edge towards it.
struct BfsLabel {
  BfsId comp = kNone;
  std::uint32_t dist = 0;
  BfsId parent = kNone;       ///< parent vertex
  BfsId parent_edge = kNone;  ///< edge id of the tree edge to the parent

  auto key() const { return std::tie(comp, dist, parent, parent_edge); }
  bool operator<(const BfsLabel& o) const { return key() < o.key(); }
  bool operator==(const BfsLabel&) const = default;
};

/// Per-vertex state of the BFS. `sm` is the smallest non-tree edge id in
/// the subtree (counted at its U endpoint); `e_star` is the root's choice
/// of the one extra edge placed by the reverse cuckoo shift.
struct BfsVertexState {
  BfsLabel label;
  BfsId sm = kNone;
  BfsId sm_edge = kNone;  ///< own edge or child tree edge providing sm
  BfsId e_star = kNone;
  bool valid : 1 = false;
  bool active : 1 = false;    ///< label changed in the last round
  bool pending : 1 = false;   ///< local neighbourhood consistent
  bool complete : 1 = false;  ///< whole subtree consistent
  bool finished : 1 = false;  ///< root has confirmed the component
  bool closing : 1 = false;   ///< emits its final values next round
  bool closed : 1 = false;
  bool error : 1 = false;
  bool sm_own : 1 = false;
};

enum class BfsKind : std::uint8_t { Vertex, HalfEdge, Assign, Stash, Error };

/// One MapReduce value of the BFS. Vertex records carry the vertex's own
/// state; half-edge records sit at `target` and carry a snapshot of the
/// other endpoint from the previous round.
struct BfsRecord {
  BfsId target = 0;  ///< vertex id (cell), the reduce key
  BfsId edge = kNone;
  BfsId other = kNone;
  BfsKind kind = BfsKind::HalfEdge;
  bool target_is_u = false;
  bool parked = false;  ///< other endpoint is closed; kept at target
  BfsVertexState state;
};

/// Round budget and per-round ceiling for the BFS on N keys in tables of
/// about 4N cells each (n = 2N half-edges). Live records stay near 2n until
/// isolated edges close, then fall off geometrically with component size;
/// the ceiling follows that envelope plus a fixed allowance for a few large
/// components.
struct BfsSchedule {
  std::size_t rounds = 0;
  std::size_t plateau = 4;  ///< rounds kept at full width
  double width = 2.0;       ///< full width relative to n
  double decay = 0.82;      ///< per-round decay after the plateau
  double floor_factor = 0.005;
  std::size_t floor_slots = 64;

  static BfsSchedule for_keys(std::size_t n_keys) {
    BfsSchedule s;
    const auto lg = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n_keys) + 2.0)));
    s.rounds = 3 * lg + 40;
    s.floor_slots = 16 + 8 * lg;
    return s;
  }

  /// Slots of X for round `round`; X_1 holds the input.
  std::size_t ceiling(std::size_t round, std::size_t n) const {
    if (round <= 1) return n;
    const std::size_t r = round - 1;  // round whose output is being kept
    double g = width;
    if (r > plateau) g *= std::pow(decay, static_cast<double>(r - plateau));
    const double body = std::max(g, floor_factor) * static_cast<double>(n);
    return static_cast<std::size_t>(std::ceil(body)) + floor_slots;
  }
};

/// Parallel BFS over the cuckoo graph with the reverse-cuckoo extension, as
/// a sparse-streaming MapReduce algorithm with fanout 2.
///
/// Vertices are cells: U = [0, m) for the second table and W = [m, 2m) for
/// the first; key x with id e is the edge (h2(x), m + h1(x)). Roots are
/// the smallest vertex of a component, so a lone key lands at h1. Every round
/// a vertex recomputes its label from its neighbours' snapshots, which
/// travel along the half-edge records. Completion is reported up the tree
/// together with the smallest non-tree edge; the root then finishes, the
/// decision flows down, and finished vertices close bottom-up emitting
/// their final (cell, edge) pairs and stash entries.
class BfsCuckoo {
 public:
  using Key = BfsId;
  using Value = BfsRecord;

  BfsCuckoo(std::uint64_t m, BfsSchedule schedule) : m_(m), schedule_(schedule) {}

  std::size_t fanout() const { return 2; }
  std::size_t rounds() const { return schedule_.rounds; }
  std::size_t ceiling(std::size_t round, std::size_t n) const { return schedule_.ceiling(round, n); }

  std::pair<Key, Value> map(const Value& v, std::size_t) const { return {v.target, v}; }

  bool value_less(const Value& a, const Value& b) const {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.edge < b.edge;
  }

  /// Packs (key, kind, edge) so integer order matches key then value_less.
  SortKey sort_key(Key k, const Value& v) const {
    return (SortKey(k) << 40) | (SortKey(static_cast<std::uint8_t>(v.kind)) << 32) | v.edge;
  }

  class Reducer {
   public:
    Reducer() = default;
    explicit Reducer(std::size_t round) : round_(round) {}

    void begin(Key v) {
      v_ = v;
      have_vertex_ = false;
      first_ = true;
      old_ = {};
      best_ = {v, 0, kNone, kNone};
      all_valid_ = true;
      comp_min_ = kNone;
      comp_max_ = 0;
      max_dist_ = 0;
      children_complete_ = true;
      sm_ = kNone;
      sm_edge_ = kNone;
      sm_own_ = false;
      parent_seen_ = false;
      parent_finished_ = false;
      parent_e_star_ = kNone;
      stale_ = false;
    }

    void step(const Value& r, Emitter<Value>& out) {
      if (r.kind == BfsKind::Vertex) {
        have_vertex_ = true;
        first_ = false;
        old_ = r.state;
        if (old_.closing) close_vertex(out);
        return;
      }
      if (first_) {
        first_ = false;
        // No vertex record: either the first round or a message to a
        // vertex that has already closed.
        if (round_ == 1) {
          old_ = fresh();
          have_vertex_ = true;
        } else {
          stale_ = true;
        }
      }
      if (stale_) return;
      observe(r);
      if (old_.closing) {
        if (r.state.label.comp != old_.label.comp) out.emit_final(final_record(BfsKind::Error, r.edge));
        else if (is_stash_edge(r)) out.emit_final(final_record(BfsKind::Stash, r.edge));
        if (!r.state.closed) out.emit(message(r, true));
        return;
      }
      if (r.state.closed) {
        BfsRecord keep = r;
        keep.parked = true;
        out.emit(keep);
      } else {
        out.emit(message(r, false));
      }
    }

    void end(Emitter<Value>& out) {
      if (stale_ || old_.closing) return;
      BfsVertexState s = old_;
      s.valid = true;
      const bool stable = have_vertex_ && best_ == old_.label;
      s.active = !stable;
      s.label = best_;
      const bool local_ok = have_vertex_ && all_valid_ && comp_min_ == comp_max_ && comp_min_ == best_.comp &&
                            stable && max_dist_ <= best_.dist + 1;
      s.pending = local_ok;
      s.complete = local_ok && children_complete_;
      s.sm = sm_;
      s.sm_edge = sm_edge_;
      s.sm_own = sm_own_;
      if (s.complete && s.label.comp == v_) {
        s.finished = true;
        s.e_star = sm_;
      } else if (s.complete && parent_seen_ && parent_finished_) {
        s.finished = true;
        s.e_star = parent_e_star_;
      }
      // A finished vertex closes next round; its closed snapshot still
      // carries the decision to its children.
      s.closing = s.finished;
      BfsRecord rec;
      rec.kind = BfsKind::Vertex;
      rec.target = v_;
      rec.state = s;
      out.emit(rec);
    }

   private:
    BfsVertexState fresh() const {
      BfsVertexState s;
      s.valid = true;
      s.label = {v_, 0, kNone, kNone};
      return s;
    }

    // Folds one neighbour snapshot into the round's accumulators.
    void observe(const BfsRecord& r) {
      const auto& o = r.state;
      if (!o.valid) {
        all_valid_ = false;
        return;
      }
      BfsLabel cand{o.label.comp, o.label.dist + 1, r.other, r.edge};
      if (cand < best_) best_ = cand;
      comp_min_ = std::min(comp_min_, o.label.comp);
      comp_max_ = std::max(comp_max_, o.label.comp);
      max_dist_ = std::max(max_dist_, o.label.dist);
      const bool child = o.label.parent_edge == r.edge;
      if (child) {
        children_complete_ = children_complete_ && o.complete;
        if (o.sm < sm_) {
          sm_ = o.sm;
          sm_edge_ = r.edge;
          sm_own_ = false;
        }
      }
      if (r.edge == old_.label.parent_edge) {
        parent_seen_ = true;
        parent_finished_ = o.finished;
        parent_e_star_ = o.e_star;
      }
      if (non_tree(r) && r.target_is_u && r.edge < sm_) {
        sm_ = r.edge;
        sm_edge_ = r.edge;
        sm_own_ = true;
      }
    }

    bool non_tree(const BfsRecord& r) const {
      return r.state.valid && r.edge != old_.label.parent_edge && r.state.label.parent_edge != r.edge;
    }

    bool is_stash_edge(const BfsRecord& r) const {
      return r.target_is_u && non_tree(r) && r.edge != old_.e_star;
    }

    BfsRecord message(const BfsRecord& r, bool closed) const {
      BfsRecord msg;
      msg.kind = BfsKind::HalfEdge;
      msg.target = r.other;
      msg.other = v_;
      msg.edge = r.edge;
      msg.target_is_u = !r.target_is_u;
      msg.state = old_;
      msg.state.closed = closed;
      return msg;
    }

    BfsRecord final_record(BfsKind kind, BfsId edge) const {
      BfsRecord f;
      f.kind = kind;
      f.target = v_;
      f.edge = edge;
      return f;
    }

    void close_vertex(Emitter<Value>& out) {
      if (old_.error) {
        out.emit_final(final_record(BfsKind::Error, kNone));
        return;
      }
      BfsId edge = kNone;
      if (old_.e_star != kNone && old_.sm == old_.e_star) edge = old_.sm_own ? old_.e_star : old_.sm_edge;
      else edge = old_.label.parent_edge;
      if (edge != kNone) out.emit_final(final_record(BfsKind::Assign, edge));
    }

    std::size_t round_ = 0;
    BfsId v_ = 0;
    bool have_vertex_ = false;
    bool first_ = true;
    bool stale_ = false;
    BfsVertexState old_;
    BfsLabel best_;
    bool all_valid_ = true;
    BfsId comp_min_ = kNone;
    BfsId comp_max_ = 0;
    std::uint32_t max_dist_ = 0;
    bool children_complete_ = true;
    BfsId sm_ = kNone;
    BfsId sm_edge_ = kNone;
    bool sm_own_ = false;
    bool parent_seen_ = false;
    bool parent_finished_ = false;
    BfsId parent_e_star_ = kNone;
  };

  Reducer reducer(std::size_t round) const { return Reducer(round); }

  /// Round-one input: both half-edges of every key, each carrying the
  /// initial state of the other endpoint.
  std::vector<BfsRecord> initial_records(std::span<const LogicalKey> keys, const HashPair& h) const {
    if (2 * m_ >= kNone || keys.size() >= kNone) throw ParameterError("cuckoo graph too large for 32-bit ids");
    std::vector<BfsRecord> in;
    in.reserve(2 * keys.size());
    for (std::size_t e = 0; e < keys.size(); ++e) {
      const auto u = static_cast<BfsId>(h.h2(keys[e]));
      const auto w = static_cast<BfsId>(m_ + h.h1(keys[e]));
      BfsRecord a;
      a.target = u;
      a.other = w;
      a.edge = static_cast<BfsId>(e);
      a.target_is_u = true;
      a.state.valid = true;
      a.state.label = {w, 0, kNone, kNone};
      BfsRecord b = a;
      b.target = w;
      b.other = u;
      b.target_is_u = false;
      b.state.label = {u, 0, kNone, kNone};
      in.push_back(a);
      in.push_back(b);
    }
    return in;
  }

  std::uint64_t m() const { return m_; }
  /// Table cell of a vertex: [0, m) is t1 and [m, 2m) is t2.
  std::uint64_t cell_of(BfsId v) const { return v < m_ ? m_ + v : v - m_; }
  const BfsSchedule& schedule() const { return schedule_; }

 private:
  std::uint64_t m_;
  BfsSchedule schedule_;
};

/// Cell assignment of a key set. Cells are numbered over both sub-tables:
/// [0, m) is t1 and [m, 2m) is t2.
struct Assignment {
  std::vector<std::pair<std::uint64_t, LogicalKey>> pairs;
  std::vector<LogicalKey> stash_keys;
};

namespace detail {

// Turns BFS finals into an assignment, or throws if the run did not settle.
inline Assignment assignment_from_finals(const BfsCuckoo& alg, const std::vector<BfsRecord>& finals,
                                         std::span<const LogicalKey> keys, std::size_t leftover,
                                         std::size_t stash_capacity) {
  Assignment a;
  std::size_t seen = 0;
  for (const auto& f : finals) {
    if (f.kind == BfsKind::Error) throw BuildFailure("BFS finished a component inconsistently");
    if (f.kind == BfsKind::Assign) a.pairs.emplace_back(alg.cell_of(f.target), keys[f.edge]);
    if (f.kind == BfsKind::Stash) a.stash_keys.push_back(keys[f.edge]);
    ++seen;
  }
  if (leftover != 0 || seen != keys.size()) throw BuildFailure("BFS did not settle within the round budget");
  if (a.stash_keys.size() > stash_capacity) throw InfeasibleStash("stash capacity exceeded");
  return a;
}

}  // namespace detail

/// Assigns every key to one of its two cells or to the stash using the BFS
/// MapReduce algorithm, executed by the plain engine.
inline Assignment bfs_cuckoo_assign(std::span<const LogicalKey> keys, const HashPair& hashes, std::size_t stash_capacity,
                                    BfsSchedule schedule) {
  BfsCuckoo alg(hashes.range(), schedule);
  auto res = run(alg, alg.initial_records(keys, hashes));
  return detail::assignment_from_finals(alg, res.finals, keys, res.leftover, stash_capacity);
}

inline Assignment bfs_cuckoo_assign(std::span<const LogicalKey> keys, const HashPair& hashes,
                                    std::size_t stash_capacity) {
  return bfs_cuckoo_assign(keys, hashes, stash_capacity, BfsSchedule::for_keys(keys.size()));
}

}  // namespace horam
