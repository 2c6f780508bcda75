#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "spinchaos/operators.hpp"

namespace spinchaos {

/// Spectrum and eigenvectors of one sector. Eigenvalues ascend; column n of
/// `vectors` is the eigenvector of values[n]. `vectors` is empty when the
/// decomposition ran in values-only mode.
struct EigenData {
  std::string sector;
  double volume = 0.0;  // L for chains, Lx*Ly for tori
  std::uint64_t fingerprint = 0;
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;

  Eigen::Index dim() const noexcept { return values.size(); }
  bool has_vectors() const noexcept { return vectors.size() > 0; }
  Eigen::VectorXd energy_density() const { return values / volume; }
};

enum class SolveMode { values_only, values_and_vectors };

/// Dense Hermitian eigendecomposition (tridiagonal QR). Matrices with exactly
/// zero imaginary parts take the real-symmetric path. Throws
/// Error(solver_failure) naming the sector if the iteration does not converge.
EigenData diagonalize(const SectorMatrix& matrix, SolveMode mode = SolveMode::values_and_vectors);

struct ValidationReport {
  double unitarity = 0.0;       // max |U^dagger U - I|
  double reconstruction = 0.0;  // max |H - U diag(E) U^dagger| / max |H|
  double trace = 0.0;           // |sum E - tr H| / D
  bool passed = false;
};

ValidationReport validate(const EigenData& data, const SectorMatrix& matrix,
                          double unitarity_tol = 1e-8, double reconstruction_tol = 1e-8);

// Cache -------------------------------------------------------------------
//
// <stem>.bin holds little-endian float64: the D eigenvalues, then the D*D
// eigenvector entries column by column as interleaved (re, im). <stem>.json
// records format version, dimension, sector, model and fingerprint.

inline constexpr int kCacheFormatVersion = 1;

void write_cache(const std::filesystem::path& stem, const EigenData& data, const std::string& model,
                 double coupling);
/// Returns nothing if the files are missing, unreadable, or carry another
/// fingerprint or format version.
std::optional<EigenData> read_cache(const std::filesystem::path& stem, std::uint64_t expected_fingerprint,
                                    bool need_vectors);

}  // namespace spinchaos
