#include "spinchaos/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "spinchaos/error.hpp"

namespace spinchaos {

Cut Cut::half(const Lattice& lattice) {
  Cut cut;
  const int n = lattice.sites() / 2;
  cut.sites.resize(n);
  std::iota(cut.sites.begin(), cut.sites.end(), 0);
  cut.description = lattice.is_chain() ? "contiguous sites [0, " + std::to_string(n) + ")"
                                       : "row-major sites [0, " + std::to_string(n) + ")";
  return cut;
}

Cut Cut::complement(int total_sites) const {
  Cut out;
  for (int s = 0; s < total_sites; ++s)
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) out.sites.push_back(s);
  out.description = "complement of " + description;
  return out;
}

Eigen::MatrixXcd reduced_density_matrix(const Eigen::Ref<const Eigen::VectorXcd>& psi, const Cut& cut,
                                        int total_sites) {
  const Eigen::Index states = Eigen::Index{1} << total_sites;
  if (psi.size() != states) throw Error(ErrorCode::dimension_mismatch, "state vector length is not 2^sites");
  if (std::abs(psi.norm() - 1.0) > 1e-8) throw Error(ErrorCode::invalid_state, "state vector is not normalized");

  std::vector<int> rest = cut.complement(total_sites).sites;
  const auto na = static_cast<int>(cut.sites.size());
  const Eigen::Index dim_a = Eigen::Index{1} << na;
  const Eigen::Index dim_b = Eigen::Index{1} << rest.size();

  Eigen::MatrixXcd amplitudes(dim_a, dim_b);
  for (Eigen::Index idx = 0; idx < states; ++idx) {
    Eigen::Index a = 0, b = 0;
    for (int k = 0; k < na; ++k) a |= ((idx >> cut.sites[k]) & 1) << k;
    for (std::size_t k = 0; k < rest.size(); ++k) b |= ((idx >> rest[k]) & 1) << k;
    amplitudes(a, b) = psi[idx];
  }
  return amplitudes * amplitudes.adjoint();
}

double entanglement_entropy(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::solver_failure, "reduced density matrix eigensolve failed");
  double entropy = 0.0;
  for (double lambda : solver.eigenvalues()) {
    if (lambda < -1e-10) throw Error(ErrorCode::invalid_state, "reduced density matrix has a negative eigenvalue");
    if (lambda <= 0.0) continue;
    entropy -= lambda * std::log(lambda);
  }
  return entropy;
}

EntanglementResult s_ave(const EigenData& eig, const SectorBasis& basis, const Cut& cut, IndexRange window) {
  if (!eig.has_vectors()) throw Error(ErrorCode::invalid_argument, "entanglement needs eigenvectors");
  if (window.end > static_cast<std::size_t>(eig.dim()) || window.size() == 0)
    throw Error(ErrorCode::invalid_window, "window does not fit the spectrum");
  const int n = basis.lattice().sites();
  EntanglementResult out;
  out.subsystem_sites = static_cast<int>(cut.sites.size());
  out.cut = cut.description;
  out.window = window;
  const double max_entropy = out.subsystem_sites * std::numbers::ln2;
  for (std::size_t i = window.begin; i < window.end; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Eigen::VectorXcd psi = basis.expand(eig.vectors.col(col));
    const double entropy = entanglement_entropy(reduced_density_matrix(psi, cut, n));
    out.energy_density.push_back(eig.values[col] / eig.volume);
    out.entropy.push_back(entropy);
    out.normalized.push_back(entropy / max_entropy);
  }
  out.s_ave = std::accumulate(out.normalized.begin(), out.normalized.end(), 0.0) /
              static_cast<double>(out.normalized.size());
  return out;
}

}  // namespace spinchaos
