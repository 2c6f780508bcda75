#include "spinchaos/lattice.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "spinchaos/error.hpp"

namespace spinchaos {

namespace {

constexpr int kMaxSites = 30;

int parse_int(std::string_view text, const std::string& context) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(ErrorCode::invalid_lattice, "cannot parse '" + context + "'");
  return value;
}

}  // namespace

Lattice Lattice::chain(int length) {
  if (length < 4 || length > kMaxSites)
    throw Error(ErrorCode::invalid_lattice,
                "chain length must lie in [4, " + std::to_string(kMaxSites) + "], got " +
                    std::to_string(length));
  return Lattice(LatticeKind::chain, length, 1);
}

Lattice Lattice::torus(int lx, int ly) {
  if (lx < 2 || ly < 2 || lx * ly > kMaxSites)
    throw Error(ErrorCode::invalid_lattice,
                "torus needs lx, ly >= 2 and at most " + std::to_string(kMaxSites) + " sites");
  return Lattice(LatticeKind::torus, lx, ly);
}

int Lattice::site(int x, int y) const {
  x = ((x % lx_) + lx_) % lx_;
  y = ((y % ly_) + ly_) % ly_;
  return x + lx_ * y;
}

std::pair<int, int> Lattice::coords(int site) const { return {site % lx_, site / lx_}; }

namespace {

void add_bond(std::vector<std::pair<int, int>>& bonds, std::set<std::pair<int, int>>& seen,
              int i, int j) {
  if (i == j) return;
  auto key = std::minmax(i, j);
  if (seen.insert(key).second) bonds.emplace_back(key.first, key.second);
}

}  // namespace

std::vector<std::pair<int, int>> Lattice::nn_bonds() const {
  std::vector<std::pair<int, int>> bonds;
  std::set<std::pair<int, int>> seen;
  for (int s = 0; s < sites(); ++s) {
    auto [x, y] = coords(s);
    add_bond(bonds, seen, s, site(x + 1, y));
    if (kind_ == LatticeKind::torus) add_bond(bonds, seen, s, site(x, y + 1));
  }
  return bonds;
}

std::vector<std::pair<int, int>> Lattice::nnn_bonds() const {
  if (kind_ != LatticeKind::chain)
    throw Error(ErrorCode::invalid_lattice, "next-nearest-neighbour bonds are defined for chains");
  std::vector<std::pair<int, int>> bonds;
  std::set<std::pair<int, int>> seen;
  for (int s = 0; s < sites(); ++s) add_bond(bonds, seen, s, site(s + 2));
  return bonds;
}

std::string Lattice::label() const {
  if (kind_ == LatticeKind::chain) return "chain:" + std::to_string(lx_);
  return "torus:" + std::to_string(lx_) + "x" + std::to_string(ly_);
}

Lattice Lattice::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::invalid_lattice, "expected 'chain:L' or 'torus:LXxLY', got '" + text + "'");
  std::string_view kind(text.data(), colon);
  std::string_view dims(text.data() + colon + 1, text.size() - colon - 1);
  if (kind == "chain") return chain(parse_int(dims, text));
  if (kind == "torus") {
    auto x = dims.find('x');
    if (x == std::string_view::npos)
      throw Error(ErrorCode::invalid_lattice, "torus dimensions must read LXxLY: '" + text + "'");
    return torus(parse_int(dims.substr(0, x), text), parse_int(dims.substr(x + 1), text));
  }
  throw Error(ErrorCode::invalid_lattice, "unknown lattice kind in '" + text + "'");
}

}  // namespace spinchaos
