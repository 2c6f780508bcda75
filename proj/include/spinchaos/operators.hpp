#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spinchaos/basis.hpp"
#include "spinchaos/lattice.hpp"

namespace spinchaos {

/// Single-site operators. `x` is kept for readability of sigma^x sigma^x
/// bonds and is expanded into plus + minus by the algebra routines.
enum class PauliOp : std::uint8_t { z, plus, minus, x };

struct PauliFactor {
  int site;
  PauliOp op;
  friend auto operator<=>(const PauliFactor&, const PauliFactor&) = default;
};

/// coefficient * prod_f op_f(site_f); factors sorted by site, sites distinct.
struct PauliTerm {
  double coefficient = 0.0;
  std::vector<PauliFactor> factors;
};

/// Sum of Pauli strings on a lattice. The stored terms are unnormalized;
/// `normalization` divides every matrix element at materialization, so the
/// intensive observables keep their 1/L visible.
struct OperatorSpec {
  std::string name;
  Lattice lattice;
  std::vector<PauliTerm> terms;
  double normalization = 1.0;
  bool anti_hermitian = false;
  bool conserves_magnetization = false;
  bool conserves_z2 = true;
  bool translation_invariant = true;

  /// Throws Error(invalid_operator) on repeated sites, out-of-range sites,
  /// zero or non-finite coefficients, or a term list not closed under
  /// (anti-)Hermitian conjugation.
  void validate() const;

  /// Normalization folded into the coefficients, x expanded, like terms merged.
  OperatorSpec simplified(double tolerance = 1e-14) const;
  bool empty() const noexcept { return terms.empty(); }
};

OperatorSpec operator+(const OperatorSpec& a, const OperatorSpec& b);
OperatorSpec operator*(double scale, const OperatorSpec& a);
inline OperatorSpec operator-(const OperatorSpec& a, const OperatorSpec& b) { return a + (-1.0) * b; }

/// Pauli-string commutator [a, b], simplified.
OperatorSpec commutator(const OperatorSpec& a, const OperatorSpec& b);

// Models ------------------------------------------------------------------

/// sum_i sigma^z_i
OperatorSpec build_h0(const Lattice& lattice);
/// H0 + 4J sum_i V_i with V_i pair creation/annihilation on nn and nnn bonds.
OperatorSpec build_h1d(const Lattice& lattice, double coupling);
/// sum_i V_i (the perturbation without the 4J prefactor).
OperatorSpec build_pair_perturbation(const Lattice& lattice);
/// Anti-Hermitian generator (g/4) sum (s+s+ - s-s-) over nn and nnn bonds, g = 4J.
OperatorSpec build_sw_generator(const Lattice& lattice, double coupling);
/// Second-order effective Hamiltonian of H1D around H0.
OperatorSpec build_h1dsw(const Lattice& lattice, double coupling);
/// H0 + J sum_<ij> sigma^x_i sigma^x_j on a torus.
OperatorSpec build_h2dtfim(const Lattice& lattice, double coupling);
/// H0 + J sum_<ij> (s+_i s-_j + s-_i s+_j) on a torus.
OperatorSpec build_h2dpt(const Lattice& lattice, double coupling);
/// prod_i sigma^z_i, the Z2 generator.
OperatorSpec build_parity(const Lattice& lattice);

/// v, u, znn or sz. v and znn divide by L, u by V; sz is left raw.
OperatorSpec build_observable(const std::string& name, const Lattice& lattice);

/// h1d | h1dsw | h2dtfim | h2dpt
OperatorSpec build_model(const std::string& model, const Lattice& lattice, double coupling);

// Matrices ----------------------------------------------------------------

/// Dense matrix of an operator inside one sector basis.
struct SectorMatrix {
  std::string sector;
  std::string source;
  double volume = 0.0;
  Eigen::MatrixXcd entries;
};

/// Applies one term to a product state. Returns the image and amplitude, or
/// nothing if the term annihilates the state.
std::optional<std::pair<SpinState, double>> apply_term(const PauliTerm& term, SpinState state);

/// Dense sector matrix. Throws Error(invalid_operator) if a term leaves the
/// Z2 sector or the result fails the (anti-)Hermiticity check at 1e-12.
SectorMatrix materialize(const OperatorSpec& spec, const SectorBasis& basis);

// Serialization -----------------------------------------------------------

nlohmann::json to_json(const OperatorSpec& spec);
OperatorSpec operator_from_json(const nlohmann::json& doc);
/// Stable 64-bit FNV-1a hash of the canonical JSON form.
std::uint64_t fingerprint(const OperatorSpec& spec);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace spinchaos
