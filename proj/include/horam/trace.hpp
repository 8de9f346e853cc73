#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace horam {

/// Order-sensitive 64-bit digest of a sequence of small integer tuples.
/// Two equal digests over equal-length sequences are treated as equal
/// sequences; tests that need certainty record the full sequence instead.
class SequenceDigest {
 public:
  void mix(std::uint64_t word) {
    state_ ^= word + 0x9e3779b97f4a7c15ULL + (state_ << 6) + (state_ >> 2);
    state_ *= 0xff51afd7ed558ccdULL;
    state_ ^= state_ >> 33;
    ++words_;
  }
  std::uint64_t value() const { return state_ ^ words_; }
  std::uint64_t words() const { return words_; }
  bool operator==(const SequenceDigest&) const = default;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
  std::uint64_t words_ = 0;
};

enum class TouchKind : std::uint8_t { Read, Write };

inline char touch_letter(TouchKind k) { return k == TouchKind::Read ? 'R' : 'W'; }

/// How much of a touch sequence a log retains: every record, counts plus
/// digests, or counts only.
enum class TraceMode { Full, Summary, Count };

/// A single touch of an indexed location in some region.
struct Touch {
  std::int32_t region;
  std::uint64_t index;
  TouchKind kind;
  bool operator==(const Touch&) const = default;
};

/// Append-only log of memory touches. In Summary mode only counts and two
/// digests are kept: one over (region, index, kind) and one over
/// (region, kind), the latter being the index-free skeleton.
class TouchLog {
 public:
  explicit TouchLog(TraceMode mode = TraceMode::Full) : mode_(mode) {}

  void record(std::int32_t region, std::uint64_t index, TouchKind kind) {
    if (kind == TouchKind::Read) ++reads_; else ++writes_;
    ++region_count(region);
    if (mode_ == TraceMode::Count) return;
    if (mode_ == TraceMode::Full) entries_.push_back({region, index, kind});
    const auto k = static_cast<std::uint64_t>(kind);
    const auto r = static_cast<std::uint64_t>(static_cast<std::uint32_t>(region));
    full_.mix((r << 33) ^ (index << 1) ^ k);
    skeleton_.mix((r << 1) ^ k);
  }

  /// Records a compare-exchange on two cells: read both, write both.
  void compare_exchange(std::int32_t region, std::uint64_t i, std::uint64_t j) {
    record(region, i, TouchKind::Read);
    record(region, j, TouchKind::Read);
    record(region, i, TouchKind::Write);
    record(region, j, TouchKind::Write);
  }

  /// Counts touches without recording them; only valid in Count mode,
  /// where the order of touches is not retained.
  void add_counts(std::int32_t region, std::uint64_t reads, std::uint64_t writes) {
    reads_ += reads;
    writes_ += writes;
    region_count(region) += reads + writes;
  }

  /// Touch totals per region; they sum to size().
  std::map<std::int32_t, std::uint64_t> per_region() const { return {regions_.begin(), regions_.end()}; }

  TraceMode mode() const { return mode_; }
  std::uint64_t size() const { return reads_ + writes_; }
  std::uint64_t reads() const { return reads_; }
  std::uint64_t writes() const { return writes_; }
  const std::vector<Touch>& entries() const { return entries_; }
  std::uint64_t digest() const { return full_.value(); }
  std::uint64_t skeleton_digest() const { return skeleton_.value(); }

  /// Equal as touch sequences (exact in Full mode, digest-based otherwise).
  bool same_sequence(const TouchLog& o) const {
    if (size() != o.size() || digest() != o.digest()) return false;
    if (mode_ == TraceMode::Full && o.mode_ == TraceMode::Full) return entries_ == o.entries_;
    return true;
  }
  bool same_skeleton(const TouchLog& o) const {
    return size() == o.size() && skeleton_digest() == o.skeleton_digest();
  }

  void clear() { *this = TouchLog(mode_); }

 private:
  std::uint64_t& region_count(std::int32_t region) {
    if (last_ < regions_.size() && regions_[last_].first == region) return regions_[last_].second;
    for (last_ = 0; last_ < regions_.size(); ++last_)
      if (regions_[last_].first == region) return regions_[last_].second;
    regions_.emplace_back(region, 0);
    return regions_.back().second;
  }

  TraceMode mode_;
  std::vector<Touch> entries_;
  SequenceDigest full_;
  SequenceDigest skeleton_;
  std::uint64_t reads_ = 0;
  std::uint64_t writes_ = 0;
  std::vector<std::pair<std::int32_t, std::uint64_t>> regions_;
  std::size_t last_ = 0;
};

}  // namespace horam
