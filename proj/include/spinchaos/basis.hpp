#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinchaos/lattice.hpp"

namespace spinchaos {

using cplx = std::complex<double>;

/// Quantum numbers of one symmetry sector. Momenta are stored as integers,
/// k = 2 pi kx / lx (and likewise for ky), so equality is exact.
struct Sector {
  int kx = 0;
  int ky = 0;
  int z2 = 1;
  std::optional<int> mx;
  std::optional<int> my;

  bool has_mirrors() const noexcept { return mx.has_value() || my.has_value(); }

  /// "k=3,z2=-1" for chains, "kx=0,ky=0,z2=1,mx=-1,my=1" for tori.
  std::string label(const Lattice& lattice) const;
  static Sector parse(const std::string& text);

  friend bool operator==(const Sector&, const Sector&) = default;
};

/// Throws Error(invalid_sector | incompatible_mirror) when the quantum
/// numbers do not fit the lattice.
void validate_sector(const Lattice& lattice, const Sector& sector);

/// Every sector of the lattice; their dimensions add up to 2^sites.
/// Tori use mirror labels in the k = (0,0) sector when `mirrors` is set.
std::vector<Sector> all_sectors(const Lattice& lattice, bool mirrors = true);

/// One element of translations x mirrors x Z2. The Z2 factor is the diagonal
/// operator prod_i sigma^z_i: it does not move bits, it multiplies a state by
/// (-1)^(number of down spins).
struct GroupElement {
  std::vector<int> permutation;  // site i is sent to permutation[i]
  bool z2 = false;
  cplx character{1.0, 0.0};
  int tx = 0;
  int ty = 0;
  bool mirror_x = false;
  bool mirror_y = false;
};

struct GroupAction {
  SpinState state;
  int sign;
};

std::vector<GroupElement> enumerate_group(const Lattice& lattice, const Sector& sector);

GroupAction apply_group_element(SpinState state, const GroupElement& g, int sites);

/// Permutes bits of a state; composed from byte lookup tables.
class SitePermutation {
 public:
  explicit SitePermutation(const std::vector<int>& permutation);
  SpinState operator()(SpinState s) const noexcept {
    SpinState out = 0;
    for (int c = 0; c < chunks_; ++c) out |= table_[c][(s >> (8 * c)) & 0xffu];
    return out;
  }

 private:
  int chunks_;
  std::vector<std::array<SpinState, 256>> table_;
};

/// Site permutations of a lattice symmetry group (translations, plus mirrors
/// when requested) together with the orbit-minimum table of all 2^sites
/// states. Shared between the sectors of one lattice.
struct PermutationGroup {
  std::vector<GroupElement> elements;  // z2 == false, unit characters
  std::vector<SitePermutation> actions;
  std::vector<SpinState> orbit_min;             // per state
  std::vector<std::uint16_t> to_min;            // element index mapping state -> orbit_min

  static std::shared_ptr<const PermutationGroup> get(const Lattice& lattice, bool mirror_x,
                                                     bool mirror_y);
};

/// Symmetry-adapted basis of one sector: orbit-minimal representatives in
/// ascending order with norms n_r = |P_sector |r>|. Immutable once built.
class SectorBasis {
 public:
  static SectorBasis build(const Lattice& lattice, const Sector& sector);
  /// Plain 2^sites product basis with no symmetry reduction.
  static SectorBasis full(const Lattice& lattice);

  const Lattice& lattice() const noexcept { return lattice_; }
  const std::optional<Sector>& sector() const noexcept { return sector_; }
  std::string label() const;

  std::size_t dim() const noexcept { return reps_.size(); }
  std::span<const SpinState> representatives() const noexcept { return reps_; }
  std::span<const double> norms() const noexcept { return norms_; }

  struct Location {
    std::size_t index;
    cplx phase;  // conj(character) of the permutation taking the state to its representative
  };
  /// Basis index of the representative of `s`, if that orbit survives the
  /// projection.
  std::optional<Location> locate(SpinState s) const;

  /// Maps sector amplitudes to the 2^sites product basis.
  Eigen::VectorXcd expand(const Eigen::Ref<const Eigen::VectorXcd>& amplitudes) const;

 private:
  explicit SectorBasis(const Lattice& lattice) : lattice_(lattice) {}

  Lattice lattice_;
  std::optional<Sector> sector_;
  std::vector<SpinState> reps_;
  std::vector<double> norms_;
  std::shared_ptr<const PermutationGroup> group_;
  std::vector<cplx> conj_chars_;  // per permutation element
};

inline SectorBasis build_sector_basis(const Lattice& lattice, const Sector& sector) {
  return SectorBasis::build(lattice, sector);
}

inline Eigen::VectorXcd expand_to_full(const Eigen::Ref<const Eigen::VectorXcd>& amplitudes,
                                       const SectorBasis& basis) {
  return basis.expand(amplitudes);
}

}  // namespace spinchaos
