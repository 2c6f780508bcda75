#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "spinchaos/basis.hpp"
#include "spinchaos/eigensolver.hpp"
#include "spinchaos/operators.hpp"

namespace testing {

/// Union of all sector spectra of a model, sorted.
inline std::vector<double> sector_union(const spinchaos::OperatorSpec& h, bool mirrors = true) {
  std::vector<double> all;
  for (const auto& s : spinchaos::all_sectors(h.lattice, mirrors)) {
    const auto basis = spinchaos::SectorBasis::build(h.lattice, s);
    if (basis.dim() == 0) continue;
    const auto eig = spinchaos::diagonalize(spinchaos::materialize(h, basis), spinchaos::SolveMode::values_only);
    all.insert(all.end(), eig.values.data(), eig.values.data() + eig.values.size());
  }
  std::sort(all.begin(), all.end());
  return all;
}

inline double max_abs_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  if (static_cast<Eigen::Index>(a.size()) != b.size()) return 1e300;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[static_cast<Eigen::Index>(i)]));
  return d;
}

/// Full product-basis matrix of a spec (real part; all operators here are real in that basis).
inline Eigen::MatrixXd full_matrix(const spinchaos::OperatorSpec& spec) {
  const auto basis = spinchaos::SectorBasis::full(spec.lattice);
  return spinchaos::materialize(spec, basis).entries.real();
}

inline Eigen::VectorXcd random_unit(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = {g(rng), g(rng)};
  return v / v.norm();
}

}  // namespace testing
