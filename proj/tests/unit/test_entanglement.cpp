#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "spinchaos/entanglement.hpp"
#include "spinchaos/error.hpp"

using namespace spinchaos;

namespace {

// Moves the A sites to the low bits by an explicit index permutation, then
// reads the vector as a column-major dim_A x dim_B matrix.
Eigen::MatrixXcd rho_by_reshaping(const Eigen::VectorXcd& psi, const std::vector<int>& a, int n) {
  std::vector<int> order = a;
  for (int s = 0; s < n; ++s)
    if (std::find(a.begin(), a.end(), s) == a.end()) order.push_back(s);
  Eigen::VectorXcd permuted(psi.size());
  for (Eigen::Index idx = 0; idx < psi.size(); ++idx) {
    Eigen::Index target = 0;
    for (int k = 0; k < n; ++k)
      if (idx >> order[k] & 1) target += Eigen::Index{1} << k;
    permuted[target] = psi[idx];
  }
  const Eigen::Index da = Eigen::Index{1} << a.size();
  Eigen::Map<const Eigen::MatrixXcd> m(permuted.data(), da, psi.size() / da);
  return m * m.adjoint();
}

Cut make_cut(std::vector<int> sites) { return Cut{std::move(sites), "test"}; }

Eigen::VectorXd sorted_eigs(const Eigen::MatrixXcd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace

TEST_CASE("product state gives a pure reduced state") {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(64);
  psi[63] = 1.0;
  for (const auto& sites : {std::vector<int>{0, 1, 2}, std::vector<int>{1, 4}}) {
    const auto rho = reduced_density_matrix(psi, make_cut(sites), 6);
    const auto ev = sorted_eigs(rho);
    CHECK(ev[ev.size() - 1] == doctest::Approx(1.0));
    CHECK(ev.head(ev.size() - 1).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(entanglement_entropy(rho) == 0.0);
  }
}

TEST_CASE("Bell pair") {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi[0b01] = 1.0 / std::sqrt(2.0);
  psi[0b10] = 1.0 / std::sqrt(2.0);
  const auto rho = reduced_density_matrix(psi, make_cut({0}), 2);
  CHECK((rho - 0.5 * Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(entanglement_entropy(rho) - std::numbers::ln2) < 1e-15);
}

TEST_CASE("entropy of given spectra") {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(3, 3);
  rho.diagonal() << 0.5, 0.25, 0.25;
  CHECK(std::abs(entanglement_entropy(rho) - 1.5 * std::numbers::ln2) < 1e-15);
  const Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(8, 8) / 8.0;
  CHECK(std::abs(entanglement_entropy(mixed) - 3.0 * std::numbers::ln2) < 1e-14);
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
  bad.diagonal() << 1.001, -0.001;
  CHECK_THROWS_AS(entanglement_entropy(bad), Error);
  Eigen::MatrixXcd tiny = Eigen::MatrixXcd::Zero(2, 2);
  tiny.diagonal() << 1.0, -1e-13;
  CHECK(entanglement_entropy(tiny) == 0.0);
}

TEST_CASE("unnormalized input is rejected") {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(16);
  CHECK_THROWS_AS(reduced_density_matrix(psi, make_cut({0, 1}), 4), Error);
  CHECK_THROWS_AS(reduced_density_matrix(Eigen::VectorXcd::Ones(8), make_cut({0}), 4), Error);
}

TEST_CASE("reduced state of an eigenstate matches the reshaping construction") {
  const auto lat = Lattice::chain(6);
  const auto basis = SectorBasis::build(lat, Sector{1, 0, 1});
  const auto eig = diagonalize(materialize(build_h1d(lat, 1.0), basis));
  const auto psi = basis.expand(eig.vectors.col(eig.dim() / 2));
  for (const auto& sites : {std::vector<int>{0, 1, 2}, std::vector<int>{1, 3, 4}, std::vector<int>{5}}) {
    const auto rho = reduced_density_matrix(psi, make_cut(sites), 6);
    CHECK(std::abs(rho.trace() - cplx(1.0)) < 1e-10);
    const auto ref = rho_by_reshaping(psi, sites, 6);
    CHECK((rho - ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((sorted_eigs(rho) - sorted_eigs(ref)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sorted_eigs(rho).minCoeff() > -1e-12);
  }
}

TEST_CASE("pure states have equal entropies on both sides of a cut") {
  const auto lat = Lattice::chain(10);
  const auto basis = SectorBasis::build(lat, Sector{3, 0, -1});
  const auto eig = diagonalize(materialize(build_h1d(lat, 0.4), basis));
  const Cut a = Cut::half(lat);
  const Cut b = a.complement(10);
  const Cut odd = make_cut({0, 3, 7});
  for (Eigen::Index n : {Eigen::Index{0}, eig.dim() / 3, eig.dim() / 2, eig.dim() - 1}) {
    const auto psi = basis.expand(eig.vectors.col(n));
    const double sa = entanglement_entropy(reduced_density_matrix(psi, a, 10));
    const double sb = entanglement_entropy(reduced_density_matrix(psi, b, 10));
    CHECK(std::abs(sa - sb) < 1e-9);
    CHECK(sa <= 5 * std::numbers::ln2 + 1e-9);
    const double s_odd = entanglement_entropy(reduced_density_matrix(psi, odd, 10));
    const double s_rest = entanglement_entropy(reduced_density_matrix(psi, odd.complement(10), 10));
    CHECK(std::abs(s_odd - s_rest) < 1e-9);

    // Global phase and reordering of the B sites.
    const Eigen::VectorXcd rotated = psi * std::polar(1.0, 0.731);
    CHECK(std::abs(entanglement_entropy(reduced_density_matrix(rotated, a, 10)) - sa) < 1e-12);
    Cut reordered = b;
    std::reverse(reordered.sites.begin(), reordered.sites.end());
    CHECK(std::abs(entanglement_entropy(reduced_density_matrix(psi, reordered, 10)) - sb) < 1e-12);
  }
}

TEST_CASE("effective-model eigenstates: block-wise entropy equals the full computation") {
  const int l = 8;
  const auto lat = Lattice::chain(l);
  const auto basis = SectorBasis::build(lat, Sector{1, 0, 1});
  const auto eig = diagonalize(materialize(build_h1dsw(lat, 0.3), basis));
  const Cut a = Cut::half(lat);
  for (Eigen::Index n = 0; n < eig.dim(); n += 5) {
    const auto psi = basis.expand(eig.vectors.col(n));
    const auto rho = reduced_density_matrix(psi, a, l);
    const double full = entanglement_entropy(rho);
    // rho_A is block diagonal in the magnetization of A.
    double blocks = 0.0;
    for (int up = 0; up <= 4; ++up) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index s = 0; s < 16; ++s)
        if (popcount(static_cast<SpinState>(s)) == up) idx.push_back(s);
      Eigen::MatrixXcd blk(idx.size(), idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) {
          blk(i, j) = rho(idx[i], idx[j]);
        }
      for (double lam : sorted_eigs(blk))
        if (lam > 0.0) blocks -= lam * std::log(lam);
      for (Eigen::Index s = 0; s < 16; ++s)
        for (Eigen::Index t = 0; t < 16; ++t)
          if (popcount(static_cast<SpinState>(s)) != popcount(static_cast<SpinState>(t)))
            CHECK(std::abs(rho(s, t)) < 1e-10);
    }
    CHECK(std::abs(full - blocks) < 1e-10);
  }
}

TEST_CASE("product eigenstates give zero average entropy") {
  const auto lat = Lattice::chain(6);
  const auto basis = SectorBasis::full(lat);
  EigenData eig;
  eig.sector = "full";
  eig.volume = 6;
  eig.values.resize(64);
  eig.vectors = Eigen::MatrixXcd::Identity(64, 64);
  for (int i = 0; i < 64; ++i) eig.values[i] = i;
  const auto r = s_ave(eig, basis, Cut::half(lat), central_window(64));
  CHECK(r.s_ave == 0.0);
  CHECK(r.subsystem_sites == 3);
}

TEST_CASE("average entanglement grows from weak to strong coupling at L = 12, k = pi/3") {
  const auto lat = Lattice::chain(12);
  const Sector sec{2, 0, 1};
  const auto basis = SectorBasis::build(lat, sec);
  auto average = [&](double j) {
    const auto eig = diagonalize(materialize(build_h1d(lat, j), basis));
    return s_ave(eig, basis, Cut::half(lat), central_window(static_cast<std::size_t>(eig.dim()))).s_ave;
  };
  const double strong = average(1.0);
  const double weak = average(0.05);
  MESSAGE("s_ave(J=1) = " << strong << ", s_ave(J=0.05) = " << weak);
  CHECK(strong >= 0.5);
  CHECK(strong <= 1.0);
  CHECK(strong > weak);
}
