#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "../oracle/kron_oracle.hpp"
#include "helpers.hpp"
#include "spinchaos/eigensolver.hpp"
#include "spinchaos/error.hpp"

using namespace spinchaos;

namespace {

SectorMatrix wrap(const Eigen::MatrixXcd& m, const std::string& name = "test") {
  return SectorMatrix{name, "test", 1.0, m};
}

Eigen::MatrixXcd random_hermitian(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
  return (a + a.adjoint()) / 2.0;
}

}  // namespace

TEST_CASE("diagonal input") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  m.diagonal() << 1.0, 2.0, 3.0;
  const auto eig = diagonalize(wrap(m));
  CHECK(eig.values[0] == 1.0);
  CHECK(eig.values[1] == 2.0);
  CHECK(eig.values[2] == 3.0);
  CHECK((eig.vectors.cwiseAbs() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("two-level off-diagonal input") {
  for (double w : {0.7, -1.3}) {
    Eigen::MatrixXcd m(2, 2);
    m << 0.0, w, w, 0.0;
    const auto eig = diagonalize(wrap(m));
    CHECK(eig.values[0] == doctest::Approx(-std::abs(w)).epsilon(1e-15));
    CHECK(eig.values[1] == doctest::Approx(std::abs(w)).epsilon(1e-15));
  }
  Eigen::MatrixXcd c(2, 2);
  c << 0.0, cplx(0, 2.0), cplx(0, -2.0), 0.0;
  const auto eig = diagonalize(wrap(c));
  CHECK(eig.values[0] == doctest::Approx(-2.0));
  CHECK(validate(eig, wrap(c)).passed);
}

TEST_CASE("sector spectra of H1D reproduce the full spectrum") {
  const auto lat = Lattice::chain(8);
  CHECK(testing::max_abs_diff(testing::sector_union(build_h1d(lat, 0.5)), oracle::spectrum(oracle::h1d(8, 0.5))) <
        1e-10);
}

TEST_CASE("validation report") {
  const auto id = wrap(Eigen::MatrixXcd::Identity(4, 4));
  const auto r0 = validate(diagonalize(id), id);
  CHECK(r0.unitarity == 0.0);
  CHECK(r0.reconstruction == 0.0);
  CHECK(r0.passed);

  const auto h = wrap(random_hermitian(50, 11));
  auto eig = diagonalize(h);
  const auto r1 = validate(eig, h);
  CHECK(r1.reconstruction < 1e-10);
  CHECK(r1.unitarity < 1e-10);
  CHECK(r1.trace < 1e-12);
  CHECK(r1.passed);

  eig.vectors.col(7).setZero();
  CHECK_FALSE(validate(eig, h).passed);
}

TEST_CASE("complex sectors and trace preservation") {
  const auto lat = Lattice::chain(10);
  for (const auto& s : all_sectors(lat)) {
    const auto m = materialize(build_h1d(lat, 0.8), SectorBasis::build(lat, s));
    const auto eig = diagonalize(m);
    const auto rep = validate(eig, m);
    CHECK_MESSAGE(rep.passed, s.label(lat));
    CHECK(std::abs(eig.values.sum() - m.entries.trace().real()) < 1e-8 * static_cast<double>(eig.dim()));
    for (Eigen::Index i = 1; i < eig.dim(); ++i) CHECK(eig.values[i] >= eig.values[i - 1]);
  }
}

TEST_CASE("sectors of several hundred states stay unitary") {
  const auto lat = Lattice::chain(14);
  for (const Sector s : {Sector{1, 0, 1}, Sector{0, 0, 1}}) {
    const auto m = materialize(build_h1d(lat, 0.7), SectorBasis::build(lat, s));
    REQUIRE(m.entries.rows() > 500);
    const auto rep = validate(diagonalize(m), m);
    MESSAGE(s.label(lat) << ": unitarity " << rep.unitarity << ", reconstruction " << rep.reconstruction);
    CHECK(rep.passed);
  }
}

TEST_CASE("values-only mode agrees with full mode") {
  const auto h = wrap(random_hermitian(40, 3));
  const auto a = diagonalize(h, SolveMode::values_only);
  const auto b = diagonalize(h, SolveMode::values_and_vectors);
  CHECK_FALSE(a.has_vectors());
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "spinchaos_cache_test";
  std::filesystem::remove_all(dir);
  const auto lat = Lattice::chain(8);
  const auto m = materialize(build_h1d(lat, 0.3), SectorBasis::build(lat, Sector{1, 0, 1}));
  auto eig = diagonalize(m);
  eig.fingerprint = 0x1234abcdULL;
  const auto stem = dir / "h1d_k1";
  write_cache(stem, eig, "h1d", 0.3);

  const auto back = read_cache(stem, 0x1234abcdULL, true);
  REQUIRE(back.has_value());
  CHECK(back->sector == eig.sector);
  CHECK(back->volume == eig.volume);
  CHECK((back->values - eig.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back->vectors - eig.vectors).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(read_cache(stem, 0x999ULL, true).has_value());
  CHECK_FALSE(read_cache(dir / "missing", 0x1234abcdULL, false).has_value());

  // Layout: little-endian float64 eigenvalues first, then (re, im) pairs.
  std::ifstream bin(stem.string() + ".bin", std::ios::binary);
  unsigned char bytes[8];
  bin.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  double first;
  std::memcpy(&first, &bits, 8);
  CHECK(first == eig.values[0]);
  CHECK(std::filesystem::file_size(stem.string() + ".bin") ==
        static_cast<std::uintmax_t>(8 * (eig.dim() + 2 * eig.dim() * eig.dim())));

  auto values_only = diagonalize(m, SolveMode::values_only);
  values_only.fingerprint = 7;
  write_cache(dir / "vals", values_only, "h1d", 0.3);
  CHECK(read_cache(dir / "vals", 7, false).has_value());
  CHECK_FALSE(read_cache(dir / "vals", 7, true).has_value());
  std::filesystem::remove_all(dir);
}
