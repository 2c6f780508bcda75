#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spinchaos {

/// Product state in the sigma^z basis. Bit i set means spin i points up.
using SpinState = std::uint64_t;

enum class LatticeKind { chain, torus };

/// Periodic chain or periodic rectangular lattice. Sites are numbered
/// row-major: site = x + lx * y.
class Lattice {
 public:
  static Lattice chain(int length);
  static Lattice torus(int lx, int ly);

  LatticeKind kind() const noexcept { return kind_; }
  bool is_chain() const noexcept { return kind_ == LatticeKind::chain; }
  int lx() const noexcept { return lx_; }
  int ly() const noexcept { return ly_; }
  int sites() const noexcept { return lx_ * ly_; }

  int site(int x, int y = 0) const;
  std::pair<int, int> coords(int site) const;

  /// Nearest-neighbour bonds, each geometric edge once, as (i, j) with i < j.
  std::vector<std::pair<int, int>> nn_bonds() const;
  /// Chain next-nearest-neighbour bonds, each geometric edge once.
  std::vector<std::pair<int, int>> nnn_bonds() const;

  /// "chain:12" or "torus:3x2"; parse() accepts the same syntax.
  std::string label() const;
  static Lattice parse(const std::string& text);

  friend bool operator==(const Lattice&, const Lattice&) = default;

 private:
  Lattice(LatticeKind kind, int lx, int ly) : kind_(kind), lx_(lx), ly_(ly) {}

  LatticeKind kind_;
  int lx_;
  int ly_;
};

inline int popcount(SpinState s) noexcept { return __builtin_popcountll(s); }

/// Sum_i sigma^z_i of a product state.
inline int magnetization(SpinState s, int sites) noexcept { return 2 * popcount(s) - sites; }

}  // namespace spinchaos
