#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinchaos {

/// Half-open index range [begin, end) into an ascending spectrum.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// [round(D(1-f)/2), round(D(1+f)/2)). Throws Error(invalid_window) for
/// fractions outside (0, 1] or windows holding fewer than two levels.
IndexRange central_window(std::size_t count, double fraction = 0.2);

inline constexpr double kDegenerateSpacing = 1e-12;

struct SpectrumStats {
  std::vector<double> spacings;  // delta_n inside the window
  std::vector<double> ratios;    // r_n
  double r_ave = 0.0;
  double omega_h = 0.0;          // mean spacing inside the window
  IndexRange window;
  std::size_t degenerate_pairs = 0;
};

/// Gap ratios r_n = min(d_n, d_n+1) / max(d_n, d_n+1) over the window. Pairs
/// of exactly degenerate spacings give no ratio. Throws
/// Error(degenerate_spectrum) when no ratio survives.
SpectrumStats r_statistics(std::span<const double> eigenvalues, IndexRange window);
SpectrumStats r_statistics(const Eigen::VectorXd& eigenvalues, IndexRange window);

enum class SectorWeighting { pooled, dimension };

struct SectorStats {
  const SpectrumStats* stats;
  std::size_t dim;
  double weight = 1.0;  // multiplicity, e.g. 2 for a deduplicated +-k pair
};

/// Combined r_ave over sectors: the mean of all pooled r_n, or the
/// D_s-weighted mean of per-sector r_ave.
double aggregate_sectors(std::span<const SectorStats> records, SectorWeighting weighting = SectorWeighting::pooled);

}  // namespace spinchaos
