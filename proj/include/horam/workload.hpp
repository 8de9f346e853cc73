#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hash.hpp"

namespace horam {

/// One logical operation; addresses are 0-based.
struct Op {
  bool write = false;
  std::uint64_t addr = 0;
  std::int64_t value = 0;
  bool operator==(const Op&) const = default;
};

using Workload = std::vector<Op>;

/// Reads `R <addr>` / `W <addr> <value>` lines. Blank lines and lines
/// starting with '#' are skipped.
inline Workload parse_workload(std::istream& is) {
  Workload w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    Op op;
    bool ok = static_cast<bool>(ls >> kind >> op.addr);
    if (ok && kind == "W") ok = static_cast<bool>(ls >> op.value);
    else if (kind != "R") ok = false;
    std::string rest;
    if (!ok || ls >> rest) throw ParameterError("bad workload line " + std::to_string(lineno) + ": " + line);
    op.write = kind == "W";
    w.push_back(op);
  }
  return w;
}

inline Workload parse_workload(const std::string& text) {
  std::istringstream is(text);
  return parse_workload(is);
}

inline void write_workload(std::ostream& os, const Workload& w) {
  for (const auto& op : w) {
    if (op.write) os << "W " << op.addr << ' ' << op.value << '\n';
    else os << "R " << op.addr << '\n';
  }
}

/// Uniform addresses, reads and writes with equal probability.
inline Workload random_workload(std::uint64_t n, std::uint64_t ops, std::uint64_t seed) {
  if (n == 0) throw ParameterError("workload needs n > 0");
  std::mt19937_64 rng(seed);
  Workload w(ops);
  for (auto& op : w) {
    op.addr = rng() % n;
    op.write = rng() & 1;
    if (op.write) op.value = static_cast<std::int64_t>(rng() % 1000000);
  }
  return w;
}

inline Workload repeated_workload(std::uint64_t addr, std::uint64_t ops) { return Workload(ops, Op{false, addr, 0}); }

inline Workload sweep_workload(std::uint64_t n, std::uint64_t ops) {
  if (n == 0) throw ParameterError("workload needs n > 0");
  Workload w(ops);
  for (std::uint64_t t = 0; t < ops; ++t) w[t] = {false, t % n, 0};
  return w;
}

/// Seeded initial array contents.
inline std::vector<std::int64_t> initial_contents(std::uint64_t n, std::uint64_t seed) {
  std::vector<std::int64_t> v(n);
  for (std::uint64_t a = 0; a < n; ++a) v[a] = static_cast<std::int64_t>(mix64(seed ^ mix64(a + 1)) >> 24);
  return v;
}

}  // namespace horam
