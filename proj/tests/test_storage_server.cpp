#include <gtest/gtest.h>

#include <random>
#include <set>
#include <vector>

#include "horam/storage_server.hpp"

using namespace horam;

namespace {

Blob pattern(std::size_t len, std::uint8_t seed) {
  Blob b(len);
  for (std::size_t i = 0; i < len; ++i) b[i] = static_cast<std::uint8_t>(seed * 31 + i);
  return b;
}

}  // namespace

TEST(CipherBox, RoundTrips) {
  CipherBox box(7, 18);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    Blob p(18);
    for (auto& x : p) x = static_cast<std::uint8_t>(rng());
    const Blob c = box.encrypt(p);
    ASSERT_EQ(c.size(), box.blob_len());
    ASSERT_EQ(box.decrypt(c), p);
  }
}

TEST(CipherBox, FreshCiphertextEveryTime) {
  CipherBox box(9, 18);
  const Blob p = pattern(18, 3);
  std::set<Blob> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(box.encrypt(p));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(CipherBox, LengthIndependentOfContent) {
  CipherBox box(11, 5);
  EXPECT_EQ(box.encrypt(Blob(5, 0)).size(), box.encrypt(Blob(5, 0xff)).size());
  EXPECT_EQ(box.blob_len(), CipherBox::kNonceBytes + 5);
  EXPECT_THROW(box.encrypt(Blob(4)), ParameterError);
}

TEST(CipherBox, OtherKeyDoesNotDecrypt) {
  CipherBox a(1, 16), b(2, 16);
  const Blob p = pattern(16, 5);
  EXPECT_NE(b.decrypt(a.encrypt(p)), p);
}

TEST(ServerStore, WriteThenReadRoundTrip) {
  ServerStore s(4);
  s.create_level(2, 8);
  const Blob x = pattern(4, 1);
  s.write_cell(2, 5, x);
  const auto got = s.read_cell(2, 5);
  EXPECT_EQ(Blob(got.begin(), got.end()), x);
  EXPECT_EQ(s.cells(2), 8u);
}

TEST(ServerStore, OneEntryPerTouch) {
  ServerStore s(4);
  s.create_level(0, 16);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    if (rng() & 1) s.read_cell(0, rng() % 16);
    else s.write_cell(0, rng() % 16, pattern(4, static_cast<std::uint8_t>(i)));
  }
  EXPECT_EQ(s.log().size(), 1000u);
  EXPECT_EQ(s.log().entries().size(), 1000u);
}

TEST(ServerStore, TraceHoldsLocationsOnly) {
  ServerStore a(4), b(4);
  a.create_level(1, 4);
  b.create_level(1, 4);
  a.write_cell(1, 3, pattern(4, 1));
  b.write_cell(1, 3, pattern(4, 2));
  a.read_cell(1, 0);
  b.read_cell(1, 0);
  EXPECT_EQ(export_trace(a.log()), export_trace(b.log()));
}

TEST(ServerStore, OutOfRange) {
  ServerStore s(4);
  s.create_level(0, 2);
  EXPECT_THROW(s.read_cell(0, 2), OutOfRange);
  EXPECT_THROW(s.read_cell(3, 0), OutOfRange);
  EXPECT_THROW(s.write_cell(0, 0, Blob(3)), ParameterError);
  s.drop_level(0);
  EXPECT_FALSE(s.has_level(0));
  EXPECT_THROW(s.cells(0), OutOfRange);
}

TEST(TraceExport, RoundTrip) {
  ServerStore s(2);
  s.create_level(4, 8);
  s.write_cell(4, 1, Blob(2));
  s.read_cell(4, 7);
  s.note(1000, 12, TouchKind::Write);
  const auto text = export_trace(s.log());
  EXPECT_EQ(text, "0 4 1 W\n1 4 7 R\n2 1000 12 W\n");
  const auto recs = parse_trace(text);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[1], (TraceRecord{1, 4, 7, TouchKind::Read}));
  EXPECT_EQ(recs[2].level, 1000);
}

TEST(TraceExport, EmptyStoreGivesEmptyTrace) {
  ServerStore s(2);
  EXPECT_EQ(export_trace(s.log()), "");
  EXPECT_TRUE(parse_trace("").empty());
}

TEST(TraceExport, RejectsMalformedLines) {
  EXPECT_THROW(parse_trace("0 1 2 X\n"), ParameterError);
  EXPECT_THROW(parse_trace("0 1\n"), ParameterError);
  ServerStore counted(2, TraceMode::Count);
  EXPECT_THROW(export_trace(counted.log()), ParameterError);
}
