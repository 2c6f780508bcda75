#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinchaos/chaos_metrics.hpp"
#include "spinchaos/eigensolver.hpp"
#include "spinchaos/operators.hpp"

namespace spinchaos {

/// O_nm = <n|O|m> in the eigenbasis of one sector.
struct EigenbasisOperator {
  std::string sector;
  std::string name;
  Eigen::MatrixXcd elements;
};

EigenbasisOperator to_eigenbasis(const SectorMatrix& observable, const EigenData& eig);

enum class Kernel { gaussian, lorentzian };

Kernel parse_kernel(const std::string& name);
std::string to_string(Kernel kernel);

/// Regularized delta function of width eta.
double kernel_value(Kernel kernel, double x, double eta);

/// min_n (E_{n+1} - E_n) over the whole sector, ignoring exact degeneracies
/// below kDegenerateSpacing.
double min_level_gap(const EigenData& eig);

/// `points` log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

struct SpectralOptions {
  Kernel kernel = Kernel::gaussian;
  std::optional<double> eta;   // defaults to min_level_gap
  std::vector<double> omega;   // empty: default log grid
  std::size_t grid_points = 200;
};

struct SpectralFunctionResult {
  std::vector<double> omega;
  std::vector<double> values;  // F_ave(omega)
  Kernel kernel = Kernel::gaussian;
  double eta = 0.0;
  double bandwidth = 0.0;      // E_max - E_min of the sector
  double volume = 0.0;
  IndexRange window;
};

/// Window average of the kernel-smoothed |f_n(omega)|^2 with the volume
/// prefactor. The default grid runs from max(eta/2, 1e-4) to the bandwidth.
SpectralFunctionResult spectral_function(const EigenbasisOperator& op, const EigenData& eig, IndexRange window,
                                         const SpectralOptions& options = {});

/// |f_n(omega)|^2 for a single eigenstate at the given frequencies.
std::vector<double> spectral_function_state(const EigenbasisOperator& op, const EigenData& eig, std::size_t n,
                                            Kernel kernel, double eta, const std::vector<double>& omega);

/// Integral of the Gaussian-smoothed |f_n(omega)|^2 over all omega, by
/// trapezoidal quadrature with step eta/2 on the union of +-12 eta
/// neighbourhoods of the transition frequencies.
double integrate_spectral_function(const EigenbasisOperator& op, const EigenData& eig, std::size_t n, double eta);

inline constexpr double kDegeneratePair = 1e-12;

struct SusceptibilityResult {
  std::vector<double> chi;        // per eigenstate, whole spectrum
  double chi_typ = 0.0;           // exp(mean ln chi_n) over chi_n > 0
  double mean_log_chi = 0.0;
  std::size_t positive = 0;       // states entering the geometric mean
  std::size_t zero_states = 0;
  std::size_t skipped_pairs = 0;  // |E_n - E_m| < kDegeneratePair
  double omega_h = 0.0;           // mean spacing over the central 20 %
  std::size_t dim = 0;
  double volume = 0.0;
};

/// chi_n = V sum_{m != n} |O_nm|^2 / (E_n - E_m)^2. Throws
/// Error(diagonal_observable) if every chi_n vanishes.
SusceptibilityResult fidelity_susceptibility(const EigenbasisOperator& op, const EigenData& eig);

/// (eps_n, O_nn) over the central `fraction` of the spectrum.
std::vector<std::pair<double, double>> diagonal_eev(const EigenbasisOperator& op, const EigenData& eig,
                                                    double fraction = 0.8);

}  // namespace spinchaos
