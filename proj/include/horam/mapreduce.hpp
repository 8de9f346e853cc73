#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "oblivious_sort.hpp"
#include "trace.hpp"

namespace horam {

enum class Finality : std::uint8_t { NonFinal, Final, Dummy };

template <typename V>
struct MrValue {
  V payload{};
  Finality finality = Finality::Dummy;
  bool real() const { return finality != Finality::Dummy; }
};

/// Collects reducer output for one input value and enforces the fanout.
template <typename V>
class Emitter {
 public:
  explicit Emitter(std::size_t fanout) : fanout_(fanout) {}

  void emit(V v) { push({std::move(v), Finality::NonFinal}); }
  void emit_final(V v) { push({std::move(v), Finality::Final}); }

  std::vector<MrValue<V>>& out() { return out_; }
  void reset() { out_.clear(); }

 private:
  void push(MrValue<V> v) {
    if (out_.size() >= fanout_) throw ReducerStateViolation("reducer exceeded its declared fanout");
    out_.push_back(std::move(v));
  }
  std::size_t fanout_;
  std::vector<MrValue<V>> out_;
};

/// A sparse-streaming MapReduce algorithm: a map from a value to a keyed
/// value, a streaming reducer with constant state, a fanout bound, a round
/// count and a ceiling on the number of live values per round.
template <typename A>
concept MapReduceAlgorithm = requires(const A& a, const typename A::Value& v, typename A::Reducer& r,
                                      Emitter<typename A::Value>& em, const typename A::Key& k) {
  { a.fanout() } -> std::convertible_to<std::size_t>;
  { a.rounds() } -> std::convertible_to<std::size_t>;
  { a.ceiling(std::size_t{}, std::size_t{}) } -> std::convertible_to<std::size_t>;
  { a.map(v, std::size_t{}) } -> std::same_as<std::pair<typename A::Key, typename A::Value>>;
  { a.value_less(v, v) } -> std::convertible_to<bool>;
  { a.reducer(std::size_t{}) } -> std::same_as<typename A::Reducer>;
  r.begin(k);
  r.step(v, em);
  r.end(em);
};

template <typename V>
struct MrRunResult {
  std::vector<V> finals;
  std::uint64_t message_complexity = 0;
  std::vector<std::uint64_t> live_per_round;  ///< real input values of each round
  std::size_t leftover = 0;                   ///< non-final values alive after the last round
};

namespace detail {

// Streams one sorted key group through a fresh reducer state. The reducer
// outputs for input j are handed to `sink(j, outputs)`; end() output is
// charged to the last input.
template <typename A, typename Keyed, typename Sink>
void reduce_sorted(const A& alg, std::size_t round, const std::vector<Keyed>& ys, std::size_t count, Sink&& sink) {
  Emitter<typename A::Value> em(alg.fanout());
  typename A::Reducer r = alg.reducer(round);
  for (std::size_t j = 0; j < count; ++j) {
    if (j == 0 || ys[j - 1].key < ys[j].key) {
      r = alg.reducer(round);
      r.begin(ys[j].key);
    }
    em.reset();
    r.step(ys[j].value, em);
    if (j + 1 == count || ys[j].key < ys[j + 1].key) r.end(em);
    sink(j, em.out());
  }
}

}  // namespace detail

/// Plain sequential execution with message-complexity accounting.
template <MapReduceAlgorithm A>
MrRunResult<typename A::Value> run(const A& alg, const std::vector<typename A::Value>& input) {
  using K = typename A::Key;
  using V = typename A::Value;
  struct Keyed {
    K key;
    V value;
  };
  MrRunResult<V> res;
  std::vector<V> xs = input;
  for (std::size_t round = 1; round <= alg.rounds(); ++round) {
    res.live_per_round.push_back(xs.size());
    res.message_complexity += xs.size();
    std::vector<Keyed> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) {
      auto [k, v] = alg.map(x, round);
      ys.push_back({std::move(k), std::move(v)});
    }
    std::stable_sort(ys.begin(), ys.end(), [&](const Keyed& a, const Keyed& b) {
      if (a.key < b.key) return true;
      if (b.key < a.key) return false;
      return alg.value_less(a.value, b.value);
    });
    std::vector<V> next;
    detail::reduce_sorted(alg, round, ys, ys.size(), [&](std::size_t, std::vector<MrValue<V>>& out) {
      for (auto& o : out) {
        ++res.message_complexity;
        if (o.finality == Finality::Final) res.finals.push_back(std::move(o.payload));
        else next.push_back(std::move(o.payload));
      }
    });
    xs = std::move(next);
  }
  res.leftover = xs.size();
  return res;
}

enum class MrPhase : std::uint8_t { Map, SortY, Reduce, SortZ, Truncate, Collect };

inline const char* phase_name(MrPhase p) {
  switch (p) {
    case MrPhase::Map: return "map";
    case MrPhase::SortY: return "sort-y";
    case MrPhase::Reduce: return "reduce";
    case MrPhase::SortZ: return "sort-z";
    case MrPhase::Truncate: return "truncate";
    case MrPhase::Collect: return "collect";
  }
  return "?";
}

struct MrStep {
  MrPhase phase;
  std::uint32_t round;
  std::uint64_t slots;
  bool operator==(const MrStep&) const = default;
};

/// Data-independent skeleton of an oblivious MapReduce simulation.
using MrTrace = std::vector<MrStep>;

inline void write_mr_trace(std::ostream& os, const MrTrace& t) {
  for (const auto& s : t) os << s.round << ' ' << phase_name(s.phase) << ' ' << s.slots << '\n';
}

template <typename V>
struct ObliviousMrResult {
  std::vector<V> finals;
  MrTrace trace;
  std::vector<std::uint64_t> live_per_round;  ///< non-final values entering each round (instrumentation)
  std::vector<std::uint64_t> carried_per_round;  ///< real slots of Z kept for the next round (instrumentation)
  std::size_t leftover = 0;
};

/// Where the simulation's arrays live for touch accounting. Arrays X, Y,
/// Z and the output O use regions base..base+3.
struct MrMemory {
  TouchLog* log = nullptr;
  std::int32_t region_base = 0;
};

/// sorts Y, reduces writing exactly d slots per input, compacts Z so dummies
/// go last and truncates to f(i + 1, n). Array sizes and touch order depend
/// only on (t, f, n, d). Finals ride along in X until the next map scan
/// copies them to the output array.
template <MapReduceAlgorithm A, typename Sorter>
ObliviousMrResult<typename A::Value> run_oblivious(const A& alg, const std::vector<typename A::Value>& input,
                                                   const Sorter& sorter, MrMemory mem = {}) {
  using K = typename A::Key;
  using V = typename A::Value;
  struct Keyed {
    K key{};
    V value{};
    bool dummy = true;
  };
  auto touch = [&](std::int32_t r, std::uint64_t i, TouchKind k) {
    if (mem.log) mem.log->record(mem.region_base + r, i, k);
  };
  const std::int32_t RX = 0, RY = 1, RZ = 2, RO = 3;

  ObliviousMrResult<V> res;
  const std::size_t n = input.size();
  const std::size_t d = alg.fanout();
  const std::size_t t = alg.rounds();

  std::size_t f = alg.ceiling(1, n);
  if (n > f) throw CeilingViolation("input exceeds the first-round ceiling");
  std::vector<MrValue<V>> xs(f);
  for (std::size_t j = 0; j < n; ++j) xs[j] = {input[j], Finality::NonFinal};
  std::vector<MrValue<V>> out;
  std::uint64_t out_pos = 0;

  auto collect_scan = [&](std::size_t round, MrPhase phase, std::vector<Keyed>* ys) {
    res.trace.push_back({phase, static_cast<std::uint32_t>(round), xs.size()});
    std::uint64_t live = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      touch(RX, j, TouchKind::Read);
      auto& x = xs[j];
      live += x.finality == Finality::NonFinal;
      touch(RO, out_pos++, TouchKind::Write);
      if (x.finality == Finality::Final) out.push_back(x);
      if (ys) {
        touch(RY, j, TouchKind::Write);
        if (x.finality == Finality::NonFinal) {
          auto [k, v] = alg.map(x.payload, round);
          (*ys)[j] = {std::move(k), std::move(v), false};
        }
      } else if (x.finality == Finality::NonFinal) {
        ++res.leftover;
      }
    }
    return live;
  };

  for (std::size_t round = 1; round <= t; ++round) {
    std::vector<Keyed> ys(f);
    res.live_per_round.push_back(collect_scan(round, MrPhase::Map, &ys));

    res.trace.push_back({MrPhase::SortY, static_cast<std::uint32_t>(round), f});
    if constexpr (requires { alg.sort_key(ys[0].key, ys[0].value); }) {
      sort_by_key(sorter, ys,
                  [&](const Keyed& y) { return y.dummy ? SortKey(1) << 95 : SortKey(alg.sort_key(y.key, y.value)); },
                  mem.region_base + RY);
    } else {
      sorter(ys,
             [&](const Keyed& a, const Keyed& b) {
               if (a.dummy != b.dummy) return b.dummy;
               if (a.dummy) return false;
               if (a.key < b.key) return true;
               if (b.key < a.key) return false;
               return alg.value_less(a.value, b.value);
             },
             mem.region_base + RY);
    }

    // Reduce with one value of lookahead so the end of a key group is known
    // before the last value's d output slots are written.
    res.trace.push_back({MrPhase::Reduce, static_cast<std::uint32_t>(round), f * d});
    std::vector<MrValue<V>> zs(f * d);
    std::size_t reals = 0;
    while (reals < f && !ys[reals].dummy) ++reals;
    detail::reduce_sorted(alg, round, ys, reals, [&](std::size_t j, std::vector<MrValue<V>>& o) {
      for (std::size_t s = 0; s < o.size(); ++s) zs[j * d + s] = std::move(o[s]);
    });
    for (std::size_t j = 0; j <= f; ++j) {
      if (j < f) touch(RY, j, TouchKind::Read);
      if (j > 0)
        for (std::size_t s = 0; s < d; ++s) touch(RZ, (j - 1) * d + s, TouchKind::Write);
    }

    res.trace.push_back({MrPhase::SortZ, static_cast<std::uint32_t>(round), f * d});
    compact_by(sorter, zs, [](const MrValue<V>& z) { return z.real(); }, mem.region_base + RZ);

    const std::size_t next_f = alg.ceiling(round + 1, n);
    res.trace.push_back({MrPhase::Truncate, static_cast<std::uint32_t>(round), next_f});
    {
      std::uint64_t carried = 0;
      for (const auto& z : zs) carried += z.real();
      res.carried_per_round.push_back(carried);
    }
    if (next_f < zs.size()) {
      touch(RZ, next_f, TouchKind::Read);
      if (zs[next_f].real()) throw CeilingViolation("round " + std::to_string(round) + " output exceeds the ceiling");
    }
    xs.assign(next_f, MrValue<V>{});
    for (std::size_t j = 0; j < next_f; ++j) {
      touch(RZ, j, TouchKind::Read);
      touch(RX, j, TouchKind::Write);
      if (j < zs.size()) xs[j] = std::move(zs[j]);
    }
    f = next_f;
  }
  collect_scan(t + 1, MrPhase::Collect, nullptr);
  res.finals.reserve(out.size());
  for (auto& o : out) res.finals.push_back(std::move(o.payload));
  return res;
}

}  // namespace horam
