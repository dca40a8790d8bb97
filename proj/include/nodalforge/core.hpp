#pragma once

// Shared primitives: error type, deterministic RNG, union-find, small helpers.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodalforge {

using Index = std::int32_t;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Thrown on contract violations: unrealizable metrics, bad configs, solver
/// breakdowns.  The message names the offending entity (cell id, edge, ...).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// === deterministic RNG ======================================================
// A fixed SplitMix64 stream; used to seed eigensolver blocks.  We avoid
// std::normal_distribution because its output is implementation-defined.

class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in (0,1); never returns 0 or 1 exactly.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pinned arithmetic, reproducible).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// === union-find =============================================================

class UnionFind {
public:
  explicit UnionFind(Index n) : parent_(n), rank_(n, 0) {
    for (Index i = 0; i < n; ++i) parent_[i] = i;
  }

  Index find(Index a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

  bool same(Index a, Index b) { return find(a) == find(b); }

private:
  std::vector<Index> parent_;
  std::vector<int> rank_;
};

// === small helpers ==========================================================

/// Key for an undirected edge; order-independent.
inline std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

/// FNV-1a over a byte string; used for config hashes in reports.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Parity of the permutation taking `a` to sorted order.  Tuples are short
/// (<= 4 entries) so a quadratic scan is fine.
template <std::size_t N>
inline int sort_parity(std::array<Index, N> a, std::size_t used) {
  int swaps = 0;
  for (std::size_t i = 0; i + 1 < used; ++i)
    for (std::size_t j = 0; j + 1 < used - i; ++j)
      if (a[j] > a[j + 1]) {
        std::swap(a[j], a[j + 1]);
        ++swaps;
      }
  return swaps % 2;
}

}  // namespace nodalforge
