#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "trace.hpp"

namespace horam {

/// Ordered block I/O records of an external-memory computation. Entries are
/// (kind, block index); the region field is unused for a single device.
using IoTrace = TouchLog;

/// Line-delimited `R <idx>` / `W <idx>` text form of a fully recorded trace.
inline void write_io_trace(std::ostream& os, const IoTrace& trace) {
  if (trace.mode() != TraceMode::Full) throw Error("only fully recorded traces can be serialised");
  for (const auto& t : trace.entries()) os << touch_letter(t.kind) << ' ' << t.index << '\n';
}

inline IoTrace read_io_trace(std::istream& is) {
  IoTrace trace(TraceMode::Full);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    char kind = 0;
    std::uint64_t idx = 0;
    if (!(ls >> kind >> idx) || (kind != 'R' && kind != 'W')) throw Error("malformed I/O trace line: " + line);
    trace.record(0, idx, kind == 'R' ? TouchKind::Read : TouchKind::Write);
  }
  return trace;
}

/// Simulated disk of fixed-size blocks. Records carry a sentinel flag so
/// padding can be ordered after every real value.
template <typename T>
class BlockDevice {
 public:
  struct Record {
    T value{};
    bool sentinel = false;
  };

  BlockDevice(std::size_t block_size, const std::vector<T>& initial, TraceMode mode = TraceMode::Full,
              TouchLog* external_log = nullptr, std::int32_t region = 0)
      : block_size_(block_size), own_log_(mode), log_(external_log ? external_log : &own_log_), region_(region) {
    if (block_size == 0) throw ParameterError("block size must be positive");
    records_.resize(round_up(initial.size()));
    for (std::size_t i = 0; i < initial.size(); ++i) records_[i].value = initial[i];
    length_ = initial.size();
    top_ = records_.size();
  }

  std::size_t block_size() const { return block_size_; }
  std::size_t length() const { return length_; }
  std::size_t blocks() const { return records_.size() / block_size_; }

  void read_block(std::size_t b, Record* out) {
    log_->record(region_, b, TouchKind::Read);
    std::copy_n(records_.begin() + static_cast<std::ptrdiff_t>(b * block_size_), block_size_, out);
  }
  void write_block(std::size_t b, const Record* in) {
    log_->record(region_, b, TouchKind::Write);
    std::copy_n(in, block_size_, records_.begin() + static_cast<std::ptrdiff_t>(b * block_size_));
  }

  /// Reserves a block-aligned scratch region and returns its first record.
  std::size_t allocate(std::size_t n) {
    const std::size_t start = top_;
    top_ += round_up(n);
    if (records_.size() < top_) records_.resize(top_);
    return start;
  }
  std::size_t mark() const { return top_; }
  void release(std::size_t mark) { top_ = mark; }

  /// Reads records without I/O accounting (instrumentation only).
  const Record& peek(std::size_t i) const { return records_.at(i); }
  std::vector<T> contents() const {
    std::vector<T> out;
    out.reserve(length_);
    for (std::size_t i = 0; i < length_; ++i) out.push_back(records_[i].value);
    return out;
  }

  const IoTrace& io_log() const { return *log_; }

  std::size_t round_up(std::size_t n) const { return (n + block_size_ - 1) / block_size_ * block_size_; }

 private:
  std::size_t block_size_;
  std::vector<Record> records_;
  std::size_t length_ = 0;
  std::size_t top_ = 0;
  TouchLog own_log_;
  TouchLog* log_;
  std::int32_t region_;
};

namespace detail {

/// Sequential reader over [start, start + len); each overlapped block is
/// read exactly once.
template <typename T>
class BlockReader {
 public:
  using Record = typename BlockDevice<T>::Record;
  BlockReader(BlockDevice<T>& dev, std::size_t start, std::size_t len)
      : dev_(dev), pos_(start), end_(start + len), buf_(dev.block_size()) {}

  Record next() {
    const std::size_t B = dev_.block_size();
    const std::size_t b = pos_ / B;
    if (b != loaded_) {
      dev_.read_block(b, buf_.data());
      loaded_ = b;
    }
    return buf_[pos_++ % B];
  }
  bool done() const { return pos_ >= end_; }

 private:
  BlockDevice<T>& dev_;
  std::size_t pos_;
  std::size_t end_;
  std::vector<Record> buf_;
  std::size_t loaded_ = static_cast<std::size_t>(-1);
};

/// Sequential writer over [start, start + len). Blocks only partly covered
/// by the range are read before being rewritten; a block is written as
/// soon as the range leaves it, so up to B-1 records are held back.
template <typename T>
class BlockWriter {
 public:
  using Record = typename BlockDevice<T>::Record;
  BlockWriter(BlockDevice<T>& dev, std::size_t start, std::size_t len)
      : dev_(dev), start_(start), pos_(start), end_(start + len), buf_(dev.block_size()) {}

  void put(const Record& r) {
    if (pos_ >= end_) throw Error("block writer overrun");
    const std::size_t B = dev_.block_size();
    const std::size_t b = pos_ / B;
    if (pos_ % B == 0 || pos_ == start_) {
      const std::size_t lo = b * B;
      if (lo < start_ || lo + B > end_) dev_.read_block(b, buf_.data());
    }
    buf_[pos_ % B] = r;
    ++pos_;
    if (pos_ % B == 0 || pos_ == end_) dev_.write_block(b, buf_.data());
  }
  bool done() const { return pos_ == end_; }

 private:
  BlockDevice<T>& dev_;
  std::size_t start_;
  std::size_t pos_;
  std::size_t end_;
  std::vector<Record> buf_;
};

}  // namespace detail

/// Ceiling of (M/B)^(1/3) in exact integer arithmetic: the smallest a with
/// a^3 * B >= M.
inline std::size_t merge_arity(std::size_t M, std::size_t B) {
  std::size_t a = 1;
  while (static_cast<unsigned __int128>(a) * a * a * B < M) ++a;
  return std::max<std::size_t>(a, 2);
}

inline void check_tall_cache(std::size_t M, std::size_t B) {
  const auto b4 = static_cast<unsigned __int128>(B) * B * B * B;
  if (static_cast<unsigned __int128>(M) <= 3 * b4) throw TallCacheViolation("internal memory must exceed 3*B^4");
}

/// Rows of recursive merge outputs captured for inspection. Sentinel
/// padding is kept and orders after every real value.
template <typename T>
struct MergeMatrix {
  using Record = typename BlockDevice<T>::Record;
  std::vector<std::vector<Record>> rows;
  std::size_t column_stride = 0;  ///< number of merged runs k
};

/// Checks that rows and columns are sorted and that every element of
/// column j is <= every element of column j + k. Returns the number of
/// violated pairs.
template <typename T, typename Less = std::less<>>
std::size_t merge_matrix_violations(const MergeMatrix<T>& D, Less less = {}) {
  using Record = typename MergeMatrix<T>::Record;
  auto lt = [&](const Record& a, const Record& b) {
    if (a.sentinel) return false;
    return b.sentinel || less(a.value, b.value);
  };
  std::size_t bad = 0;
  const std::size_t rows = D.rows.size();
  if (rows == 0) return 0;
  const std::size_t cols = D.rows[0].size();
  for (const auto& r : D.rows)
    for (std::size_t j = 1; j < r.size(); ++j) bad += lt(r[j], r[j - 1]);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 1; i < rows; ++i) bad += lt(D.rows[i][j], D.rows[i - 1][j]);
    if (j + D.column_stride < cols) {
      const std::size_t jk = j + D.column_stride;
      // max of column j against min of column j + k
      const Record* hi = &D.rows[0][j];
      const Record* lo = &D.rows[0][jk];
      for (std::size_t i = 1; i < rows; ++i) {
        if (lt(*hi, D.rows[i][j])) hi = &D.rows[i][j];
        if (lt(D.rows[i][jk], *lo)) lo = &D.rows[i][jk];
      }
      bad += lt(*lo, *hi);
    }
  }
  return bad;
}

struct EmSortStats {
  std::size_t arity = 0;
  std::size_t padded_length = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t ios() const { return reads + writes; }
};

/// Data-oblivious external-memory k-way modular mergesort.
///
/// Instances that fit in M are loaded, sorted and stored. Larger ones are
/// split into a = ceil((M/B)^(1/3)) parts, sorted recursively and merged by
/// the modular merge: a subproblems built from the elements at positions
/// j mod a, merged recursively into the rows of a matrix D, which is then
/// swept with a window of 2a columns emitting the smallest a*a elements per
/// step. All sizes are fixed by (N, M, B): the input is padded once with
/// sentinels to q * a^e with q * a <= M so every level divides exactly.
template <typename T, typename Less = std::less<>>
class EmSorter {
 public:
  using Record = typename BlockDevice<T>::Record;
  using Observer = std::function<void(const MergeMatrix<T>&)>;

  EmSorter(BlockDevice<T>& dev, std::size_t memory, Less less = {}) : dev_(dev), M_(memory), less_(less) {
    check_tall_cache(M_, dev_.block_size());
    arity_ = merge_arity(M_, dev_.block_size());
  }

  void set_observer(Observer obs) { observer_ = std::move(obs); }
  std::size_t arity() const { return arity_; }

  /// Sorts the first n records of the device.
  EmSortStats sort(std::size_t n) {
    const auto r0 = dev_.io_log().reads();
    const auto w0 = dev_.io_log().writes();
    EmSortStats st;
    st.arity = arity_;
    if (n <= M_) {
      st.padded_length = n;
      if (n > 0) base_sort(0, n);
    } else {
      const std::size_t P = padded_length(n);
      st.padded_length = P;
      const std::size_t mark = dev_.mark();
      const std::size_t scratch = dev_.allocate(P);
      // Leaves read the input directly and pad in memory; the last merge
      // writes the first n outputs back in place.
      const std::size_t part = P / arity_;
      for (std::size_t i = 0; i < arity_; ++i)
        sort_from(scratch + i * part, part, i * part, i * part < n ? std::min(part, n - i * part) : 0);
      merge_runs(scratch, part, arity_, 0, n);
      dev_.release(mark);
    }
    st.reads = dev_.io_log().reads() - r0;
    st.writes = dev_.io_log().writes() - w0;
    return st;
  }

  /// Merges k sorted runs of length n stored back to back at `in` into one
  /// sorted run at `out` (which may equal `in`). Only the first `out_len`
  /// records are stored; by default all of them.
  void merge_runs(std::size_t in, std::size_t n, std::size_t k, std::size_t out,
                  std::size_t out_len = static_cast<std::size_t>(-1)) {
    const std::size_t total = n * k;
    out_len = std::min(out_len, total);
    if (total <= M_) {
      std::vector<Record> mem;
      mem.reserve(total);
      detail::BlockReader<T> r(dev_, in, total);
      for (std::size_t i = 0; i < total; ++i) mem.push_back(r.next());
      std::sort(mem.begin(), mem.end(), record_less());
      detail::BlockWriter<T> w(dev_, out, out_len);
      for (std::size_t i = 0; i < out_len; ++i) w.put(mem[i]);
      return;
    }
    const std::size_t m = arity_;
    if (n % m != 0) throw Error("modular merge expects run length divisible by the arity");
    const std::size_t part = n / m;  // elements each run contributes to a subproblem
    const std::size_t row_len = part * k;
    const std::size_t mark = dev_.mark();

    std::vector<std::size_t> sub(m);
    for (auto& s : sub) s = dev_.allocate(row_len);
    {
      std::vector<detail::BlockWriter<T>> writers;
      writers.reserve(m);
      for (std::size_t p = 0; p < m; ++p) writers.emplace_back(dev_, sub[p], row_len);
      for (std::size_t i = 0; i < k; ++i) {
        detail::BlockReader<T> r(dev_, in + i * n, n);
        for (std::size_t j = 0; j < n; ++j) writers[j % m].put(r.next());
      }
    }
    std::vector<std::size_t> rows(m);
    for (auto& r : rows) r = dev_.allocate(row_len);
    for (std::size_t p = 0; p < m; ++p) merge_runs(sub[p], part, k, rows[p]);

    if (observer_) {
      MergeMatrix<T> D;
      D.column_stride = k;
      for (std::size_t p = 0; p < m; ++p) {
        std::vector<Record> row(row_len);
        for (std::size_t j = 0; j < row_len; ++j) row[j] = dev_.peek(rows[p] + j);
        D.rows.push_back(std::move(row));
      }
      observer_(D);
    }

    // Sliding m x k window over D.
    std::vector<detail::BlockReader<T>> readers;
    readers.reserve(m);
    for (std::size_t p = 0; p < m; ++p) readers.emplace_back(dev_, rows[p], row_len);
    detail::BlockWriter<T> w(dev_, out, out_len);
    std::size_t written = 0;
    auto put = [&](const Record& rec) {
      if (written++ < out_len) w.put(rec);
    };
    std::vector<Record> window;
    window.reserve(2 * k * m);
    auto load_columns = [&](std::size_t count) {
      for (std::size_t c = 0; c < count; ++c)
        for (std::size_t p = 0; p < m; ++p) window.push_back(readers[p].next());
    };
    std::size_t loaded = std::min(2 * k, row_len);
    load_columns(loaded);
    for (;;) {
      std::sort(window.begin(), window.end(), record_less());
      if (loaded == row_len) {
        for (const auto& rec : window) put(rec);
        break;
      }
      const std::size_t emit = k * m;
      for (std::size_t i = 0; i < emit; ++i) put(window[i]);
      window.erase(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(emit));
      const std::size_t next = std::min(k, row_len - loaded);
      load_columns(next);
      loaded += next;
    }
    dev_.release(mark);
  }

  /// Smallest q * a^e >= n with q * a <= M.
  std::size_t padded_length(std::size_t n) const {
    const std::size_t base = std::max<std::size_t>(M_ / arity_, 1);
    std::size_t scale = 1;
    while (base * scale < n) scale *= arity_;
    const std::size_t q = (n + scale - 1) / scale;
    return q * scale;
  }

 private:
  auto record_less() const {
    return [this](const Record& a, const Record& b) {
      if (a.sentinel) return false;
      return b.sentinel || less_(a.value, b.value);
    };
  }

  // Loads the blocks overlapping [start, start + len), sorts that range in
  // memory and stores the same blocks back.
  void base_sort(std::size_t start, std::size_t len) {
    const std::size_t B = dev_.block_size();
    const std::size_t first = start / B;
    const std::size_t last = (start + len - 1) / B;
    std::vector<Record> mem((last - first + 1) * B);
    for (std::size_t b = first; b <= last; ++b) dev_.read_block(b, mem.data() + (b - first) * B);
    const auto lo = mem.begin() + static_cast<std::ptrdiff_t>(start - first * B);
    std::sort(lo, lo + static_cast<std::ptrdiff_t>(len), record_less());
    for (std::size_t b = first; b <= last; ++b) dev_.write_block(b, mem.data() + (b - first) * B);
  }

  // Sorts src[0, avail) followed by len - avail sentinels into
  // [start, start + len).
  void sort_from(std::size_t start, std::size_t len, std::size_t src, std::size_t avail) {
    if (len <= M_) {
      std::vector<Record> mem;
      mem.reserve(len);
      if (avail > 0) {
        detail::BlockReader<T> r(dev_, src, avail);
        for (std::size_t i = 0; i < avail; ++i) mem.push_back(r.next());
      }
      mem.resize(len, Record{T{}, true});
      std::sort(mem.begin(), mem.end(), record_less());
      detail::BlockWriter<T> w(dev_, start, len);
      for (const auto& rec : mem) w.put(rec);
      return;
    }
    const std::size_t k = arity_;
    const std::size_t n = len / k;
    for (std::size_t i = 0; i < k; ++i)
      sort_from(start + i * n, n, src + i * n, i * n < avail ? std::min(n, avail - i * n) : 0);
    merge_runs(start, n, k, start);
  }

  BlockDevice<T>& dev_;
  std::size_t M_;
  Less less_;
  std::size_t arity_ = 2;
  Observer observer_;
};

/// Sorts the device contents and returns I/O statistics.
template <typename T, typename Less = std::less<>>
EmSortStats em_sort(BlockDevice<T>& dev, std::size_t n, std::size_t memory, Less less = {}) {
  if (n > dev.length()) throw ParameterError("sort length exceeds device contents");
  EmSorter<T, Less> sorter(dev, memory, less);
  return sorter.sort(n);
}

/// Data-oblivious sorter over a simulated device with block size B and
/// private memory M; block I/Os are recorded into `log`.
class ExternalSorter {
 public:
  ExternalSorter(std::size_t block_size, std::size_t memory, TouchLog* log = nullptr)
      : B_(block_size), M_(memory), log_(log) {
    check_tall_cache(M_, B_);
  }

  template <typename T, typename Less>
  void operator()(std::vector<T>& items, Less less, std::int32_t region) const {
    BlockDevice<T> dev(B_, items, TraceMode::Count, log_, region);
    em_sort(dev, items.size(), M_, less);
    items = dev.contents();
  }

  /// Sorts (key, position) tags on the device and permutes the items; the
  /// block I/Os are those of sorting items.size() records.
  template <typename T, typename KeyFn>
  void by_key(std::vector<T>& items, KeyFn key, std::int32_t region) const {
    const std::size_t n = items.size();
    if (n > (std::size_t{1} << 32)) throw ParameterError("too many items for a keyed sort");
    std::vector<unsigned __int128> tags(n);
    for (std::size_t i = 0; i < n; ++i) tags[i] = (static_cast<unsigned __int128>(key(items[i])) << 32) | i;
    (*this)(tags, std::less<>{}, region);
    std::vector<T> out;
    out.reserve(n);
    for (const auto t : tags) out.push_back(std::move(items[static_cast<std::size_t>(t & 0xffffffffu)]));
    items = std::move(out);
  }

  std::size_t block_size() const { return B_; }
  std::size_t memory() const { return M_; }
  TouchLog* log() const { return log_; }

 private:
  std::size_t B_;
  std::size_t M_;
  TouchLog* log_;
};

}  // namespace horam
