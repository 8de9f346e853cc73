#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <vector>

#include "horam/oram.hpp"

using namespace horam;

namespace {

std::vector<std::int64_t> initial_values(std::uint64_t n, std::int64_t scale = 10) {
  std::vector<std::int64_t> v(n);
  for (std::uint64_t a = 0; a < n; ++a) v[a] = static_cast<std::int64_t>(a) * scale + 3;
  return v;
}

// Random reads and writes checked against a plain array.
std::uint64_t oracle_mismatches(const OramConfig& cfg, std::uint64_t ops, std::uint64_t seed) {
  auto plain = initial_values(cfg.n);
  OramOptions opt;
  opt.seed = seed;
  opt.audit = true;
  OramClient o(cfg, plain, opt);
  std::mt19937_64 rng(seed);
  std::uint64_t bad = 0;
  for (std::uint64_t t = 0; t < ops; ++t) {
    const auto a = static_cast<LogicalKey>(1 + rng() % cfg.n);
    if (rng() & 1) {
      const auto v = static_cast<std::int64_t>(rng() % 1000000);
      bad += o.write(a, v) != plain[a - 1];
      plain[a - 1] = v;
    } else {
      bad += o.read(a) != plain[a - 1];
    }
  }
  EXPECT_EQ(o.stats().duplicate_probes, 0u);
  return bad;
}

std::uint64_t potential_sum(const OramClient& o) {
  std::uint64_t s = 0;
  for (int i = o.config().k; i <= o.config().L; ++i) s += o.potential(i);
  return s;
}

}  // namespace

TEST(OramConfig, ConstantMemoryLevels) {
  const auto c = OramConfig::constant_memory(std::uint64_t{1} << 12);
  EXPECT_EQ(c.L, 12);
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(c.l, 3 + 4 + 2);
  EXPECT_EQ(c.s, 24u);
  EXPECT_EQ(c.bucket_capacity, 36u);
  EXPECT_EQ(c.kind(3), LevelKind::LinearScan);
  EXPECT_EQ(c.kind(9), LevelKind::Bucket);
  EXPECT_EQ(c.kind(10), LevelKind::Cuckoo);
}

TEST(OramConfig, SublinearMemoryLevels) {
  const auto c = OramConfig::sublinear_memory(std::uint64_t{1} << 10, 2.0);
  EXPECT_EQ(c.k, 5);
  EXPECT_EQ(c.l, 5);
  EXPECT_EQ(c.kind(6), LevelKind::Cuckoo);
  EXPECT_THROW(OramConfig::sublinear_memory(1024, 1.0), ParameterError);
  EXPECT_THROW(OramConfig::constant_memory(1000), ParameterError);
}

TEST(Oram, TopLevelHoldsValuesAndDummies) {
  OramOptions opt;
  opt.record_structure = true;
  OramClient o(OramConfig::constant_memory(8), initial_values(8), opt);
  EXPECT_EQ(o.config().L, 3);
  StructStep last{};
  for (const auto& s : o.structural_trace())
    if (s.kind == StepKind::Rebuild && s.level == 3) last = s;
  EXPECT_EQ(last.count, 16u);
}

TEST(Oram, ReadsInitialValues) {
  const std::uint64_t n = 64;
  const auto init = initial_values(n);
  OramClient o(OramConfig::constant_memory(n), init);
  for (std::uint64_t a = 1; a <= n; ++a) EXPECT_EQ(o.read(static_cast<LogicalKey>(a)), init[a - 1]);
}

TEST(Oram, WriteThenRead) {
  OramClient o(OramConfig::constant_memory(16), initial_values(16));
  EXPECT_EQ(o.write(5, 777), 43);
  EXPECT_EQ(o.read(5), 777);
  EXPECT_EQ(o.write(5, 1), 777);
  for (int t = 0; t < 40; ++t) EXPECT_EQ(o.read(5), 1);
}

TEST(Oram, RejectsBadAddresses) {
  OramClient o(OramConfig::constant_memory(16), initial_values(16));
  EXPECT_THROW(o.read(0), KeyOutOfRange);
  EXPECT_THROW(o.read(17), KeyOutOfRange);
  EXPECT_THROW(OramClient(OramConfig::constant_memory(16), initial_values(8)), ParameterError);
}

TEST(Oram, MatchesPlainArrayConstantMemory) {
  EXPECT_EQ(oracle_mismatches(OramConfig::constant_memory(64), 3000, 1), 0u);
  EXPECT_EQ(oracle_mismatches(OramConfig::constant_memory(256), 1500, 2), 0u);
}

TEST(Oram, MatchesPlainArraySublinearMemory) {
  EXPECT_EQ(oracle_mismatches(OramConfig::sublinear_memory(64, 2.0), 1000, 3), 0u);
  EXPECT_EQ(oracle_mismatches(OramConfig::sublinear_memory(256, 3.0), 600, 4), 0u);
}

TEST(Oram, PotentialsCountAccesses) {
  const std::uint64_t n = 64;
  OramClient o(OramConfig::constant_memory(n), initial_values(n));
  std::mt19937_64 rng(5);
  for (std::uint64_t t = 1; t <= 3 * n; ++t) {
    o.read(static_cast<LogicalKey>(1 + rng() % n));
    ASSERT_EQ(potential_sum(o), t % n) << "after access " << t;
  }
}

TEST(Oram, RebuildSchedule) {
  const std::uint64_t n = 64;
  OramClient o(OramConfig::constant_memory(n), initial_values(n));
  const int k = o.config().k;
  const auto base = o.stats().rebuilds_per_level;
  auto rebuilt = [&](int i) {
    const auto& m = o.stats().rebuilds_per_level;
    const auto now = m.contains(i) ? m.at(i) : 0;
    return now - (base.contains(i) ? base.at(i) : 0);
  };
  for (std::uint64_t t = 1; t < (std::uint64_t{1} << k); ++t) o.read(1);
  EXPECT_EQ(rebuilt(k + 1), 0u);
  o.read(1);
  EXPECT_EQ(rebuilt(k + 1), 1u);  // H_k emptied into H_{k+1}
  EXPECT_EQ(rebuilt(k + 2), 0u);
  for (std::uint64_t t = 0; t < (std::uint64_t{1} << k); ++t) o.read(1);
  EXPECT_EQ(rebuilt(k + 2), 1u);  // H_k and H_{k+1} emptied together
  EXPECT_EQ(o.potential(k + 1), 0u);
  while (o.stats().accesses < n) o.read(2);
  EXPECT_EQ(o.stats().full_rebuilds, 1u);
}

TEST(Oram, NoRepeatedProbes) {
  const std::uint64_t n = 128;
  OramOptions opt;
  opt.audit = true;
  OramClient o(OramConfig::constant_memory(n), initial_values(n), opt);
  for (int t = 0; t < 600; ++t) o.read(7);
  EXPECT_EQ(o.stats().duplicate_probes, 0u);
}

TEST(Oram, AccessTouchesAreConstant) {
  const std::uint64_t n = 64;
  OramClient o(OramConfig::constant_memory(n), initial_values(n));
  std::mt19937_64 rng(6);
  std::uint64_t prev = 0, per = 0;
  for (int t = 0; t < 200; ++t) {
    o.read(static_cast<LogicalKey>(1 + rng() % n));
    const auto d = o.stats().access_touches - prev;
    prev = o.stats().access_touches;
    if (t == 0) per = d;
    ASSERT_EQ(d, per) << "access " << t;
  }
}

TEST(Oram, SkeletonIndependentOfWorkload) {
  for (bool sub : {false, true}) {
    const std::uint64_t n = 64;
    const auto cfg = sub ? OramConfig::sublinear_memory(n, 2.0) : OramConfig::constant_memory(n);
    OramOptions opt;
    opt.record_structure = true;
    opt.trace_mode = TraceMode::Summary;
    OramClient same(cfg, initial_values(n), opt);
    opt.seed = 99;
    OramClient sweep(cfg, initial_values(n, 7), opt);
    for (std::uint64_t t = 0; t < 3 * n; ++t) {
      same.read(9);
      if (t % 2) sweep.write(static_cast<LogicalKey>(1 + t % n), static_cast<std::int64_t>(t));
      else sweep.read(static_cast<LogicalKey>(1 + t % n));
    }
    EXPECT_EQ(structural_trace_text(same.structural_trace()), structural_trace_text(sweep.structural_trace()));
    EXPECT_EQ(same.structural_digest(), sweep.structural_digest());
    EXPECT_TRUE(same.server().log().same_skeleton(sweep.server().log()));
  }
}

TEST(Oram, InitialTraceDependsOnSizeOnly) {
  const std::uint64_t n = 256;
  OramOptions a, b;
  a.trace_mode = b.trace_mode = TraceMode::Summary;
  b.seed = 1234;
  OramClient x(OramConfig::constant_memory(n), initial_values(n), a);
  OramClient y(OramConfig::constant_memory(n), initial_values(n, -5), b);
  EXPECT_EQ(x.stats().retries + y.stats().retries, 0u);
  EXPECT_TRUE(x.server().log().same_sequence(y.server().log()));
}

TEST(Oram, ProbesStayInsideTheLevel) {
  const std::uint64_t n = 1024;  // smallest size here with a cuckoo level
  OramOptions opt;
  opt.record_probes = true;
  OramClient o(OramConfig::constant_memory(n), initial_values(n), opt);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) o.read(static_cast<LogicalKey>(1 + rng() % n));
  ASSERT_FALSE(o.probe_samples().empty());
  for (const auto& s : o.probe_samples())
    for (auto p : s.probes) EXPECT_LT(p, s.cells);
}
