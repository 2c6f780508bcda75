#include "spinchaos/chaos_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinchaos/error.hpp"

namespace spinchaos {

IndexRange central_window(std::size_t count, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(ErrorCode::invalid_window, "window fraction must lie in (0, 1]");
  const double d = static_cast<double>(count);
  IndexRange w{static_cast<std::size_t>(std::llround(d * (1.0 - fraction) / 2.0)),
               static_cast<std::size_t>(std::llround(d * (1.0 + fraction) / 2.0))};
  w.end = std::min(w.end, count);
  if (w.end < w.begin + 2)
    throw Error(ErrorCode::invalid_window, "sector dimension " + std::to_string(count) +
                                               " too small for a window of fraction " + std::to_string(fraction));
  return w;
}

SpectrumStats r_statistics(std::span<const double> eigenvalues, IndexRange window) {
  if (window.end > eigenvalues.size() || window.size() < 2)
    throw Error(ErrorCode::invalid_window, "window does not fit the spectrum");
  SpectrumStats stats;
  stats.window = window;
  for (std::size_t i = window.begin; i + 1 < window.end; ++i) {
    const double d = eigenvalues[i + 1] - eigenvalues[i];
    if (d < -1e-12) throw Error(ErrorCode::invalid_argument, "eigenvalues must ascend");
    // Round-off sized spacings would give arbitrary ratios; treat them as exact zeros.
    if (d < kDegenerateSpacing) ++stats.degenerate_pairs;
    stats.spacings.push_back(d < kDegenerateSpacing ? 0.0 : d);
  }
  stats.omega_h = std::accumulate(stats.spacings.begin(), stats.spacings.end(), 0.0) /
                  static_cast<double>(stats.spacings.size());
  for (std::size_t i = 0; i + 1 < stats.spacings.size(); ++i) {
    const double a = stats.spacings[i];
    const double b = stats.spacings[i + 1];
    const double hi = std::max(a, b);
    if (hi <= 0.0) continue;
    stats.ratios.push_back(std::min(a, b) / hi);
  }
  if (stats.ratios.empty())
    throw Error(ErrorCode::degenerate_spectrum, "no level-spacing ratio defined in the window");
  stats.r_ave = std::accumulate(stats.ratios.begin(), stats.ratios.end(), 0.0) /
                static_cast<double>(stats.ratios.size());
  return stats;
}

SpectrumStats r_statistics(const Eigen::VectorXd& eigenvalues, IndexRange window) {
  return r_statistics(std::span<const double>(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())),
                      window);
}

double aggregate_sectors(std::span<const SectorStats> records, SectorWeighting weighting) {
  if (records.empty()) throw Error(ErrorCode::invalid_argument, "no sectors to aggregate");
  double sum = 0.0;
  double norm = 0.0;
  for (const auto& rec : records) {
    if (weighting == SectorWeighting::pooled) {
      for (double r : rec.stats->ratios) sum += rec.weight * r;
      norm += rec.weight * static_cast<double>(rec.stats->ratios.size());
    } else {
      sum += rec.weight * static_cast<double>(rec.dim) * rec.stats->r_ave;
      norm += rec.weight * static_cast<double>(rec.dim);
    }
  }
  if (norm <= 0.0) throw Error(ErrorCode::invalid_argument, "aggregate weights sum to zero");
  return sum / norm;
}

}  // namespace spinchaos
