#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinchaos/basis.hpp"
#include "spinchaos/chaos_metrics.hpp"
#include "spinchaos/eigensolver.hpp"

namespace spinchaos {

/// Subsystem A as a list of sites. The half-system default is the first
/// floor(N/2) sites: contiguous on a chain, the first half in row-major order
/// on a torus.
struct Cut {
  std::vector<int> sites;
  std::string description;

  static Cut half(const Lattice& lattice);
  Cut complement(int total_sites) const;
};

/// rho_A = Tr_B |psi><psi| for a normalized product-basis vector.
/// Throws Error(invalid_state) if |psi| differs from 1 by more than 1e-8.
Eigen::MatrixXcd reduced_density_matrix(const Eigen::Ref<const Eigen::VectorXcd>& psi, const Cut& cut,
                                        int total_sites);

/// -sum lambda ln lambda in nats. Eigenvalues in (-1e-10, 0) are clamped to
/// zero; anything more negative throws Error(invalid_state).
double entanglement_entropy(const Eigen::MatrixXcd& rho);

struct EntanglementResult {
  std::vector<double> energy_density;  // eps_n of each window state
  std::vector<double> entropy;         // S_A in nats
  std::vector<double> normalized;      // s = S_A / (N_A ln 2)
  double s_ave = 0.0;
  int subsystem_sites = 0;
  std::string cut;
  IndexRange window;
};

/// Eigenstate entanglement over a window of one sector's spectrum.
EntanglementResult s_ave(const EigenData& eig, const SectorBasis& basis, const Cut& cut, IndexRange window);

}  // namespace spinchaos
