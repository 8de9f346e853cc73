#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "cuckoo_table.hpp"
#include "em_sort.hpp"
#include "oram.hpp"
#include "stats.hpp"
#include "workload.hpp"

namespace horam {

/// One `tag name=value ...` report line. Field order is insertion order.
class ReportLine {
 public:
  explicit ReportLine(std::string tag) : text_(std::move(tag)) {}

  template <typename V>
  ReportLine& field(const std::string& name, const V& v) {
    std::ostringstream os;
    if constexpr (std::is_floating_point_v<V>) os << std::setprecision(10) << v;
    else if constexpr (std::is_same_v<V, bool>) os << (v ? 1 : 0);
    else os << v;
    text_ += ' ' + name + '=' + os.str();
    return *this;
  }

  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

using Report = std::vector<ReportLine>;

inline void write_report(std::ostream& os, const Report& r) {
  for (const auto& line : r) os << line.str() << '\n';
}

inline std::string report_text(const Report& r) {
  std::ostringstream os;
  write_report(os, r);
  return os.str();
}

struct ModeSpec {
  MemoryMode mode = MemoryMode::Constant;
  double r = 2.0;
};

/// "const" or "sublinear:<r>".
inline ModeSpec parse_mode(const std::string& text) {
  if (text == "const") return {};
  const std::string prefix = "sublinear:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double r = 0;
    try {
      r = std::stod(text.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - prefix.size() || !(r > 1.0))
      throw ParameterError("sublinear mode needs r > 1, e.g. sublinear:2");
    return {MemoryMode::Sublinear, r};
  }
  throw ParameterError("mode must be const or sublinear:<r>");
}

inline std::string mode_name(const ModeSpec& m) {
  if (m.mode == MemoryMode::Constant) return "const";
  std::ostringstream os;
  os << "sublinear:" << m.r;
  return os.str();
}

inline OramConfig make_config(std::uint64_t n, const ModeSpec& m) {
  return m.mode == MemoryMode::Constant ? OramConfig::constant_memory(n) : OramConfig::sublinear_memory(n, m.r);
}

struct BenchReport {
  std::uint64_t n = 0;
  std::string mode;
  std::uint64_t ops = 0;
  std::uint64_t seed = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t read_checks = 0;
  std::uint64_t mismatches = 0;
  std::optional<std::uint64_t> first_mismatch;
  std::uint64_t init_touches = 0;
  std::uint64_t run_touches = 0;
  std::uint64_t access_touches = 0;
  std::uint64_t total_touches = 0;
  std::uint64_t rebuilds = 0;
  std::uint64_t full_rebuilds = 0;
  std::uint64_t retries = 0;
  std::uint64_t duplicate_probes = 0;
  std::map<int, std::uint64_t> rebuilds_per_level;
  std::map<std::size_t, std::uint64_t> stash_histogram;
  std::map<std::int32_t, std::uint64_t> region_touches;
  std::vector<std::pair<std::string, bool>> checks;

  /// Amortized physical accesses per logical op, initial build excluded.
  double per_op() const { return ops ? static_cast<double>(run_touches) / static_cast<double>(ops) : 0.0; }
  double access_per_op() const { return ops ? static_cast<double>(access_touches) / static_cast<double>(ops) : 0.0; }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.second; });
  }

  Report lines() const {
    Report r;
    r.push_back(ReportLine("params").field("n", n).field("mode", mode).field("ops", ops).field("seed", seed));
    r.push_back(ReportLine("ops").field("reads", reads).field("writes", writes).field("read_checks", read_checks)
                    .field("mismatches", mismatches));
    if (first_mismatch) r.push_back(ReportLine("divergence").field("op", *first_mismatch));
    r.push_back(ReportLine("cost").field("init_touches", init_touches).field("run_touches", run_touches)
                    .field("access_touches", access_touches).field("per_op", per_op())
                    .field("access_per_op", access_per_op()));
    r.push_back(ReportLine("rebuilds").field("total", rebuilds).field("full", full_rebuilds).field("retries", retries));
    for (auto [level, c] : rebuilds_per_level) r.push_back(ReportLine("rebuild").field("level", level).field("count", c));
    for (auto [size, c] : stash_histogram) r.push_back(ReportLine("stash").field("size", size).field("count", c));
    for (auto [region, c] : region_touches)
      r.push_back(ReportLine("region").field("id", region).field("touches", c));
    r.push_back(ReportLine("trace").field("total", total_touches).field("duplicate_probes", duplicate_probes));
    for (const auto& [name, ok] : checks) r.push_back(ReportLine("check").field("name", name).field("pass", ok));
    return r;
  }
};

/// Runs the ORAM and a plain array side by side over `w`.
inline BenchReport simulate(const OramConfig& cfg, const Workload& w, std::uint64_t seed) {
  BenchReport rep;
  rep.n = cfg.n;
  rep.mode = cfg.mode == MemoryMode::Constant ? "const" : mode_name({MemoryMode::Sublinear, cfg.r});
  rep.ops = w.size();
  rep.seed = seed;
  auto plain = initial_contents(cfg.n, seed);
  OramOptions opt;
  opt.seed = seed;
  opt.audit = true;
  OramClient oram(cfg, plain, opt);
  rep.init_touches = oram.server().log().size();
  const auto access0 = oram.stats().access_touches;
  for (std::uint64_t t = 0; t < w.size(); ++t) {
    const Op& op = w[t];
    if (op.addr >= cfg.n) throw KeyOutOfRange("workload op " + std::to_string(t) + " addresses " + std::to_string(op.addr));
    const auto key = static_cast<LogicalKey>(op.addr + 1);
    bool ok;
    if (op.write) {
      ++rep.writes;
      ok = oram.write(key, op.value) == plain[op.addr];
      plain[op.addr] = op.value;
    } else {
      ++rep.reads;
      ++rep.read_checks;
      ok = oram.read(key) == plain[op.addr];
    }
    if (!ok) {
      ++rep.mismatches;
      if (!rep.first_mismatch) rep.first_mismatch = t;
    }
  }
  const auto& st = oram.stats();
  const auto& log = oram.server().log();
  rep.total_touches = log.size();
  rep.run_touches = rep.total_touches - rep.init_touches;
  rep.access_touches = st.access_touches - access0;
  rep.rebuilds = st.rebuilds;
  rep.full_rebuilds = st.full_rebuilds;
  rep.retries = st.retries;
  rep.duplicate_probes = st.duplicate_probes;
  rep.rebuilds_per_level = st.rebuilds_per_level;
  rep.stash_histogram = st.stash_histogram;
  rep.region_touches = log.per_region();
  std::uint64_t sum = 0;
  for (auto [region, c] : rep.region_touches) sum += c;
  rep.checks = {{"oracle", rep.mismatches == 0},
                {"reconcile", sum == rep.total_touches && log.reads() + log.writes() == rep.total_touches},
                {"no_repeated_probes", rep.duplicate_probes == 0}};
  return rep;
}

struct LevelEpochTest {
  std::int32_t level = 0;
  std::uint64_t epoch = 0;
  ChiSquareResult chi;
};

struct UniformityReport {
  std::vector<LevelEpochTest> tests;
  std::size_t skipped = 0;  ///< level-epochs below the sample floor
  double alpha = 0.01;

  std::size_t passed() const {
    return static_cast<std::size_t>(
        std::count_if(tests.begin(), tests.end(), [&](const auto& t) { return t.chi.p_value >= alpha; }));
  }
  double pass_rate() const {
    return tests.empty() ? 1.0 : static_cast<double>(passed()) / static_cast<double>(tests.size());
  }
  void merge(const UniformityReport& o) {
    tests.insert(tests.end(), o.tests.begin(), o.tests.end());
    skipped += o.skipped;
  }
};

inline constexpr std::size_t kMinProbes = 1000;

/// Chi-square test of the probed cells of every cuckoo level-epoch with at
/// least max(kMinProbes, 5 * bins) probes.
inline UniformityReport probe_uniformity(const std::vector<ProbeSample>& samples, double alpha = 0.01) {
  UniformityReport u;
  u.alpha = alpha;
  for (const auto& s : samples) {
    const auto bins = uniformity_bins(s.cells);
    if (s.probes.size() < std::max(kMinProbes, 5 * bins)) {
      ++u.skipped;
      continue;
    }
    u.tests.push_back({s.level, s.epoch, chi_square_uniform(s.probes, s.cells)});
  }
  return u;
}

struct TraceRun {
  StructuralTrace structure;
  std::uint64_t skeleton_digest = 0;
  std::uint64_t touches = 0;
  UniformityReport uniformity;
};

inline TraceRun trace_run(const OramConfig& cfg, const Workload& w, std::uint64_t seed) {
  OramOptions opt;
  opt.seed = seed;
  opt.record_structure = true;
  opt.record_probes = true;
  opt.trace_mode = TraceMode::Summary;
  OramClient oram(cfg, initial_contents(cfg.n, seed), opt);
  for (const auto& op : w) {
    if (op.addr >= cfg.n) throw KeyOutOfRange("workload address out of range");
    const auto key = static_cast<LogicalKey>(op.addr + 1);
    if (op.write) oram.write(key, op.value);
    else oram.read(key);
  }
  return {oram.structural_trace(), oram.server().log().skeleton_digest(), oram.server().log().size(),
          probe_uniformity(oram.probe_samples())};
}

struct TraceComparison {
  bool equal = false;
  bool skeleton_equal = false;
  std::size_t steps = 0;
  std::optional<std::size_t> first_divergence;
  UniformityReport uniformity;

  Report lines() const {
    Report r;
    auto cmp = ReportLine("compare");
    cmp.field("equal", equal).field("skeleton_equal", skeleton_equal).field("steps", steps);
    if (first_divergence) cmp.field("first_divergence", *first_divergence);
    r.push_back(cmp);
    for (const auto& t : uniformity.tests)
      r.push_back(ReportLine("uniformity").field("level", t.level).field("epoch", t.epoch)
                      .field("samples", t.chi.samples).field("bins", t.chi.bins).field("chi2", t.chi.statistic)
                      .field("p", t.chi.p_value));
    r.push_back(ReportLine("uniformity_summary").field("tested", uniformity.tests.size())
                    .field("passed", uniformity.passed()).field("skipped", uniformity.skipped)
                    .field("alpha", uniformity.alpha).field("pass_rate", uniformity.pass_rate()));
    return r;
  }
};

/// Runs both workloads with the same seed and diffs the structural traces.
/// Probe uniformity is gathered from both runs.
inline TraceComparison compare_traces(const OramConfig& cfg, const Workload& a, const Workload& b, std::uint64_t seed) {
  if (a.size() != b.size()) throw ParameterError("workloads must have equal length");
  const auto ra = trace_run(cfg, a, seed);
  const auto rb = trace_run(cfg, b, seed);
  TraceComparison c;
  c.steps = std::max(ra.structure.size(), rb.structure.size());
  const auto mis = std::mismatch(ra.structure.begin(), ra.structure.end(), rb.structure.begin(), rb.structure.end());
  if (mis.first != ra.structure.end() || mis.second != rb.structure.end())
    c.first_divergence = static_cast<std::size_t>(mis.first - ra.structure.begin());
  c.equal = !c.first_divergence;
  c.skeleton_equal = ra.skeleton_digest == rb.skeleton_digest && ra.touches == rb.touches;
  c.uniformity = ra.uniformity;
  c.uniformity.merge(rb.uniformity);
  return c;
}

struct SortBench {
  std::size_t N = 0, M = 0, B = 0, trials = 0;
  std::size_t arity = 0, padded = 0;
  std::uint64_t reads = 0, writes = 0;
  bool traces_equal = true;
  bool sorted = true;

  std::uint64_t ios() const { return reads + writes; }
  /// (N/B) log^2_{M/B}(N/B)
  double model() const {
    const double nb = static_cast<double>(N) / static_cast<double>(B);
    const double lg = std::log(nb) / std::log(static_cast<double>(M) / static_cast<double>(B));
    return nb * lg * lg;
  }

  Report lines() const {
    Report r;
    r.push_back(ReportLine("sort").field("N", N).field("M", M).field("B", B).field("trials", trials)
                    .field("arity", arity).field("padded", padded).field("reads", reads).field("writes", writes)
                    .field("ios", ios()).field("model", model()));
    r.push_back(ReportLine("check").field("name", "trace_equal").field("pass", traces_equal));
    r.push_back(ReportLine("check").field("name", "sorted").field("pass", sorted));
    return r;
  }
};

/// Sorts `trials` random permutations of 0..N-1 on a device with block
/// size B and memory M, comparing the I/O traces across trials.
inline SortBench sort_bench(std::size_t N, std::size_t M, std::size_t B, std::size_t trials, std::uint64_t seed) {
  check_tall_cache(M, B);
  if (trials == 0) throw ParameterError("sort bench needs at least one trial");
  SortBench sb{N, M, B, trials};
  std::mt19937_64 rng(seed);
  std::optional<IoTrace> reference;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::uint64_t> in(N);
    std::iota(in.begin(), in.end(), std::uint64_t{0});
    std::shuffle(in.begin(), in.end(), rng);
    BlockDevice<std::uint64_t> dev(B, in);
    const auto st = em_sort(dev, N, M);
    const auto out = dev.contents();
    for (std::size_t i = 0; i < N; ++i) sb.sorted = sb.sorted && out[i] == i;
    if (!reference) {
      reference = dev.io_log();
      sb.reads = st.reads;
      sb.writes = st.writes;
      sb.arity = st.arity;
      sb.padded = st.padded_length;
    } else {
      sb.traces_equal = sb.traces_equal && reference->same_sequence(dev.io_log());
    }
  }
  return sb;
}

struct CuckooStats {
  std::size_t n = 0, m = 0, trials = 0, stash_capacity = 0;
  double load = 0;
  std::vector<double> survival;  ///< Pr(|C_v| >= k), k = 0..
  std::optional<GeometricTail> tail;
  std::map<std::size_t, std::uint64_t> stash_histogram;      ///< insertion builds
  std::map<std::size_t, std::uint64_t> min_stash_histogram;  ///< from the cuckoo graph
  std::map<std::size_t, std::uint64_t> component_histogram;  ///< components by edge count
  std::uint64_t failures = 0;

  Report lines() const {
    Report r;
    r.push_back(ReportLine("cuckoo").field("n", n).field("m", m).field("load", load).field("trials", trials)
                    .field("stash_capacity", stash_capacity));
    for (auto [k, c] : component_histogram) r.push_back(ReportLine("component").field("edges", k).field("count", c));
    for (std::size_t k = 0; k < survival.size(); ++k)
      r.push_back(ReportLine("survival").field("k", k).field("s", survival[k]));
    if (tail)
      r.push_back(ReportLine("tail").field("beta", tail->beta).field("envelope", tail->envelope)
                      .field("r2", tail->r2).field("points", tail->points));
    for (auto [k, c] : stash_histogram) r.push_back(ReportLine("stash").field("size", k).field("count", c));
    for (auto [k, c] : min_stash_histogram) r.push_back(ReportLine("min_stash").field("size", k).field("count", c));
    r.push_back(ReportLine("failures").field("count", failures));
    return r;
  }
};

inline std::vector<LogicalKey> random_distinct_keys(std::size_t n, std::mt19937_64& rng) {
  std::set<LogicalKey> seen;
  std::vector<LogicalKey> keys;
  keys.reserve(n);
  while (keys.size() < n) {
    const auto x = static_cast<LogicalKey>(rng() >> 2) + 1;
    if (seen.insert(x).second) keys.push_back(x);
  }
  return keys;
}

/// Component sizes, stash occupancy and build failures of two-table cuckoo
/// hashing with n keys at total load n / 2m.
inline CuckooStats cuckoo_stats(std::size_t n, double load, std::size_t trials, std::uint64_t seed,
                                std::size_t stash_capacity = 0) {
  if (!(load > 0.0 && load < 0.5)) throw ParameterError("load must lie in (0, 1/2)");
  if (n == 0) throw ParameterError("cuckoo stats need n > 0");
  CuckooStats cs;
  cs.n = n;
  cs.load = load;
  cs.trials = trials;
  cs.m = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / (2.0 * load)));
  cs.stash_capacity = stash_capacity ? stash_capacity
                                     : static_cast<std::size_t>(std::ceil(2.0 * std::log2(static_cast<double>(n))));
  const double epsilon = 1.0 - static_cast<double>(n) / static_cast<double>(cs.m);
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> vertex_hits;  // vertices in components with exactly k edges
  std::uint64_t vertices = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto keys = random_distinct_keys(n, rng);
    const SeedPair seeds{rng(), rng()};
    const auto comp = component_stats(keys, HashPair(seeds, cs.m));
    vertices += comp.total_vertices;
    for (std::size_t c = 0; c < comp.sizes.size(); ++c) {
      const auto e = comp.sizes[c];
      if (vertex_hits.size() <= e) vertex_hits.resize(e + 1, 0);
      vertex_hits[e] += comp.vertices[c];
      ++cs.component_histogram[e];
    }
    ++cs.min_stash_histogram[comp.min_stash()];
    CuckooTable<std::uint8_t> table(cs.m, cs.stash_capacity, seeds, epsilon);
    bool failed = false;
    for (auto x : keys)
      if (table.insert(x, 0) == InsertStatus::StashOverflow) failed = true;
    if (failed) ++cs.failures;
    else ++cs.stash_histogram[table.stash().size()];
  }
  cs.survival.assign(std::max<std::size_t>(vertex_hits.size(), 1), 0.0);
  if (vertices) {
    std::uint64_t above = 0;
    for (std::size_t k = vertex_hits.size(); k-- > 1;) {
      above += vertex_hits[k];
      cs.survival[k] = static_cast<double>(above) / static_cast<double>(vertices);
    }
    cs.survival[0] = 1.0;
    try {
      cs.tail = fit_geometric_tail(cs.survival, static_cast<double>(vertices));
    } catch (const ParameterError&) {
    }
  }
  return cs;
}

}  // namespace horam
