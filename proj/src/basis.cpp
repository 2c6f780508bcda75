#include "spinchaos/basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "spinchaos/error.hpp"

namespace spinchaos {

// ---------------------------------------------------------------- sectors

std::string Sector::label(const Lattice& lattice) const {
  std::ostringstream out;
  if (lattice.is_chain())
    out << "k=" << kx;
  else
    out << "kx=" << kx << ",ky=" << ky;
  out << ",z2=" << z2;
  if (mx) out << ",mx=" << *mx;
  if (my) out << ",my=" << *my;
  return out.str();
}

Sector Sector::parse(const std::string& text) {
  Sector sector;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::invalid_sector, "malformed sector field '" + item + "' in '" + text + "'");
    std::string key = item.substr(0, eq);
    int value = 0;
    try {
      std::size_t used = 0;
      value = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_sector, "malformed sector value '" + item + "'");
    }
    if (key == "k" || key == "kx")
      sector.kx = value;
    else if (key == "ky")
      sector.ky = value;
    else if (key == "z2")
      sector.z2 = value;
    else if (key == "mx")
      sector.mx = value;
    else if (key == "my")
      sector.my = value;
    else
      throw Error(ErrorCode::invalid_sector, "unknown sector key '" + key + "'");
  }
  return sector;
}

void validate_sector(const Lattice& lattice, const Sector& sector) {
  if (sector.z2 != 1 && sector.z2 != -1)
    throw Error(ErrorCode::invalid_sector, "z2 must be +1 or -1");
  if (sector.kx < 0 || sector.kx >= lattice.lx())
    throw Error(ErrorCode::invalid_sector, "kx index out of range [0, lx)");
  if (sector.ky < 0 || sector.ky >= lattice.ly())
    throw Error(ErrorCode::invalid_sector, "ky index out of range [0, ly)");
  for (const auto& m : {sector.mx, sector.my})
    if (m && *m != 1 && *m != -1) throw Error(ErrorCode::invalid_sector, "mirror labels must be +1 or -1");
  if (sector.has_mirrors()) {
    if (lattice.is_chain())
      throw Error(ErrorCode::incompatible_mirror, "mirror labels are only used on tori");
    if (sector.kx != 0 || sector.ky != 0)
      throw Error(ErrorCode::incompatible_mirror,
                  "mirror labels require k = (0,0); got " + sector.label(lattice));
  }
}

std::vector<Sector> all_sectors(const Lattice& lattice, bool mirrors) {
  std::vector<Sector> out;
  for (int ky = 0; ky < lattice.ly(); ++ky) {
    for (int kx = 0; kx < lattice.lx(); ++kx) {
      const bool split = mirrors && !lattice.is_chain() && kx == 0 && ky == 0;
      for (int z2 : {1, -1}) {
        if (!split) {
          out.push_back(Sector{kx, ky, z2, std::nullopt, std::nullopt});
          continue;
        }
        for (int mx : {1, -1})
          for (int my : {1, -1}) out.push_back(Sector{kx, ky, z2, mx, my});
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------ group

namespace {

std::vector<GroupElement> permutation_elements(const Lattice& lattice, bool mirror_x,
                                               bool mirror_y) {
  std::vector<GroupElement> out;
  const int n = lattice.sites();
  for (int fy = 0; fy <= (mirror_y ? 1 : 0); ++fy)
    for (int fx = 0; fx <= (mirror_x ? 1 : 0); ++fx)
      for (int ty = 0; ty < lattice.ly(); ++ty)
        for (int tx = 0; tx < lattice.lx(); ++tx) {
          GroupElement g;
          g.tx = tx;
          g.ty = ty;
          g.mirror_x = fx != 0;
          g.mirror_y = fy != 0;
          g.permutation.resize(n);
          for (int s = 0; s < n; ++s) {
            auto [x, y] = lattice.coords(s);
            if (fx) x = -x;
            if (fy) y = -y;
            g.permutation[s] = lattice.site(x + tx, y + ty);
          }
          out.push_back(std::move(g));
        }
  return out;
}

cplx permutation_character(const Lattice& lattice, const Sector& sector, const GroupElement& g) {
  const long num = static_cast<long>(sector.kx) * g.tx * lattice.ly() +
                  static_cast<long>(sector.ky) * g.ty * lattice.lx();
  const long den = static_cast<long>(lattice.lx()) * lattice.ly();
  cplx chi = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(num) / den);
  // Exact values at the real points keep k = 0, pi sectors exactly real.
  if ((2 * num) % den == 0) chi = cplx((num % den == 0) ? 1.0 : -1.0, 0.0);
  if (g.mirror_x) chi *= static_cast<double>(sector.mx.value_or(1));
  if (g.mirror_y) chi *= static_cast<double>(sector.my.value_or(1));
  return chi;
}

}  // namespace

std::vector<GroupElement> enumerate_group(const Lattice& lattice, const Sector& sector) {
  validate_sector(lattice, sector);
  auto perms = permutation_elements(lattice, sector.mx.has_value(), sector.my.has_value());
  std::vector<GroupElement> out;
  out.reserve(2 * perms.size());
  for (int z = 0; z <= 1; ++z)
    for (const auto& p : perms) {
      GroupElement g = p;
      g.z2 = z != 0;
      g.character = permutation_character(lattice, sector, p) * (g.z2 ? double(sector.z2) : 1.0);
      out.push_back(std::move(g));
    }
  return out;
}

GroupAction apply_group_element(SpinState state, const GroupElement& g, int sites) {
  SpinState out = 0;
  for (int i = 0; i < sites; ++i)
    if (state >> i & 1u) out |= SpinState{1} << g.permutation[i];
  int sign = 1;
  if (g.z2 && ((sites - popcount(state)) & 1)) sign = -1;
  return {out, sign};
}

SitePermutation::SitePermutation(const std::vector<int>& permutation)
    : chunks_(static_cast<int>((permutation.size() + 7) / 8)), table_(chunks_) {
  for (int c = 0; c < chunks_; ++c)
    for (unsigned byte = 0; byte < 256; ++byte) {
      SpinState image = 0;
      for (int b = 0; b < 8; ++b) {
        const std::size_t site = 8 * c + b;
        if (site < permutation.size() && (byte >> b & 1u)) image |= SpinState{1} << permutation[site];
      }
      table_[c][byte] = image;
    }
}

std::shared_ptr<const PermutationGroup> PermutationGroup::get(const Lattice& lattice, bool mirror_x,
                                                              bool mirror_y) {
  using Key = std::tuple<std::string, bool, bool>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const PermutationGroup>> cache;

  Key key{lattice.label(), mirror_x, mirror_y};
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto group = std::make_shared<PermutationGroup>();
  group->elements = permutation_elements(lattice, mirror_x, mirror_y);
  const std::size_t count = group->elements.size();
  for (const auto& g : group->elements) group->actions.emplace_back(g.permutation);

  std::vector<std::uint16_t> inverse(count);
  for (std::size_t a = 0; a < count; ++a) {
    const auto& p = group->elements[a].permutation;
    std::vector<int> inv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = static_cast<int>(i);
    for (std::size_t b = 0; b < count; ++b)
      if (group->elements[b].permutation == inv) {
        inverse[a] = static_cast<std::uint16_t>(b);
        break;
      }
  }

  const SpinState states = SpinState{1} << lattice.sites();
  constexpr SpinState unset = ~SpinState{0};
  group->orbit_min.assign(states, unset);
  group->to_min.assign(states, 0);
  for (SpinState s = 0; s < states; ++s) {
    if (group->orbit_min[s] != unset) continue;
    // Ascending sweep: the first unvisited state is its orbit's minimum.
    for (std::size_t a = 0; a < count; ++a) {
      const SpinState t = group->actions[a](s);
      if (group->orbit_min[t] != unset) continue;
      group->orbit_min[t] = s;
      group->to_min[t] = inverse[a];
    }
  }
  cache.emplace(key, group);
  return group;
}

// ------------------------------------------------------------------ basis

SectorBasis SectorBasis::build(const Lattice& lattice, const Sector& sector) {
  validate_sector(lattice, sector);
  SectorBasis basis(lattice);
  basis.sector_ = sector;
  basis.group_ = PermutationGroup::get(lattice, sector.mx.has_value(), sector.my.has_value());
  const auto& group = *basis.group_;
  const std::size_t count = group.elements.size();

  basis.conj_chars_.reserve(count);
  for (const auto& g : group.elements)
    basis.conj_chars_.push_back(std::conj(permutation_character(lattice, sector, g)));

  const int n = lattice.sites();
  const SpinState states = SpinState{1} << n;
  for (SpinState s = 0; s < states; ++s) {
    if (group.orbit_min[s] != s) continue;
    const int down = n - popcount(s);
    if ((down % 2 == 0 ? 1 : -1) != sector.z2) continue;
    cplx overlap = 0.0;
    for (std::size_t a = 0; a < count; ++a)
      if (group.actions[a](s) == s) overlap += basis.conj_chars_[a];
    overlap /= static_cast<double>(count);
    if (overlap.real() < 1e-12) continue;
    basis.reps_.push_back(s);
    basis.norms_.push_back(std::sqrt(overlap.real()));
  }
  return basis;
}

SectorBasis SectorBasis::full(const Lattice& lattice) {
  SectorBasis basis(lattice);
  const SpinState states = SpinState{1} << lattice.sites();
  basis.reps_.resize(states);
  for (SpinState s = 0; s < states; ++s) basis.reps_[s] = s;
  basis.norms_.assign(states, 1.0);
  return basis;
}

std::string SectorBasis::label() const {
  return sector_ ? sector_->label(lattice_) : std::string("full");
}

std::optional<SectorBasis::Location> SectorBasis::locate(SpinState s) const {
  if (!group_) {
    if (s >= reps_.size()) return std::nullopt;
    return Location{static_cast<std::size_t>(s), cplx(1.0, 0.0)};
  }
  const SpinState rep = group_->orbit_min[s];
  auto it = std::lower_bound(reps_.begin(), reps_.end(), rep);
  if (it == reps_.end() || *it != rep) return std::nullopt;
  return Location{static_cast<std::size_t>(it - reps_.begin()), conj_chars_[group_->to_min[s]]};
}

Eigen::VectorXcd SectorBasis::expand(const Eigen::Ref<const Eigen::VectorXcd>& amplitudes) const {
  if (static_cast<std::size_t>(amplitudes.size()) != dim())
    throw Error(ErrorCode::dimension_mismatch, "amplitude vector does not match sector dimension");
  const std::size_t states = std::size_t{1} << lattice_.sites();
  if (!group_) return amplitudes;

  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(states));
  const std::size_t count = group_->elements.size();
  for (std::size_t j = 0; j < dim(); ++j) {
    const cplx factor = amplitudes[static_cast<Eigen::Index>(j)] / (static_cast<double>(count) * norms_[j]);
    if (factor == cplx(0.0)) continue;
    for (std::size_t a = 0; a < count; ++a)
      full[static_cast<Eigen::Index>(group_->actions[a](reps_[j]))] += factor * conj_chars_[a];
  }
  const double norm = full.norm();
  if (amplitudes.norm() > 0.0 && norm < 1e-300)
    throw Error(ErrorCode::invalid_state, "expanded vector has zero norm; sector basis is corrupted");
  return full;
}

}  // namespace spinchaos
