#include "spinchaos/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spinchaos/error.hpp"

namespace spinchaos {

namespace {

constexpr double kGaussianReach = 40.0;  // exp(-800) underflows; terms beyond are zero

struct Transition {
  double omega;
  double weight;
};

double sum_kernel(const std::vector<Transition>& sorted, Kernel kernel, double eta, double omega) {
  double total = 0.0;
  if (kernel == Kernel::gaussian) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), omega - kGaussianReach * eta,
                               [](const Transition& t, double v) { return t.omega < v; });
    for (auto it = lo; it != sorted.end() && it->omega <= omega + kGaussianReach * eta; ++it)
      total += it->weight * kernel_value(kernel, omega - it->omega, eta);
  } else {
    for (const auto& t : sorted) total += t.weight * kernel_value(kernel, omega - t.omega, eta);
  }
  return total;
}

std::vector<Transition> state_transitions(const EigenbasisOperator& op, const EigenData& eig, std::size_t n,
                                          double scale) {
  std::vector<Transition> out;
  const auto row = static_cast<Eigen::Index>(n);
  for (Eigen::Index m = 0; m < eig.dim(); ++m) {
    if (m == row) continue;
    const double w = std::norm(op.elements(row, m));
    if (w == 0.0) continue;
    out.push_back({eig.values[row] - eig.values[m], scale * w});
  }
  std::sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) { return a.omega < b.omega; });
  return out;
}

void check_shapes(const EigenbasisOperator& op, const EigenData& eig) {
  if (op.elements.rows() != eig.dim() || op.elements.cols() != eig.dim())
    throw Error(ErrorCode::dimension_mismatch, "eigenbasis operator does not match the spectrum");
}

}  // namespace

EigenbasisOperator to_eigenbasis(const SectorMatrix& observable, const EigenData& eig) {
  if (!eig.has_vectors()) throw Error(ErrorCode::invalid_argument, "eigenbasis transform needs eigenvectors");
  if (observable.entries.rows() != eig.vectors.rows() || observable.sector != eig.sector)
    throw Error(ErrorCode::dimension_mismatch,
                "observable sector " + observable.sector + " does not match eigen data " + eig.sector);
  EigenbasisOperator out{eig.sector, observable.source, {}};
  out.elements.noalias() = eig.vectors.adjoint() * (observable.entries * eig.vectors);
  return out;
}

Kernel parse_kernel(const std::string& name) {
  if (name == "gaussian") return Kernel::gaussian;
  if (name == "lorentzian") return Kernel::lorentzian;
  throw Error(ErrorCode::invalid_argument, "unknown kernel '" + name + "' (expected gaussian or lorentzian)");
}

std::string to_string(Kernel kernel) { return kernel == Kernel::gaussian ? "gaussian" : "lorentzian"; }

double kernel_value(Kernel kernel, double x, double eta) {
  if (kernel == Kernel::gaussian)
    return std::exp(-x * x / (2.0 * eta * eta)) / (std::sqrt(2.0 * std::numbers::pi) * eta);
  return eta / (std::numbers::pi * (x * x + eta * eta));
}

double min_level_gap(const EigenData& eig) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < eig.dim(); ++i) {
    const double d = eig.values[i + 1] - eig.values[i];
    if (d >= kDegenerateSpacing) gap = std::min(gap, d);
  }
  if (!std::isfinite(gap)) throw Error(ErrorCode::degenerate_spectrum, "sector has no nondegenerate level gap");
  return gap;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2)
    throw Error(ErrorCode::invalid_argument, "log grid needs 0 < lo < hi and at least two points");
  std::vector<double> out(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

SpectralFunctionResult spectral_function(const EigenbasisOperator& op, const EigenData& eig, IndexRange window,
                                         const SpectralOptions& options) {
  check_shapes(op, eig);
  if (window.size() == 0 || window.end > static_cast<std::size_t>(eig.dim()))
    throw Error(ErrorCode::invalid_window, "spectral function window is empty or out of range");
  SpectralFunctionResult out;
  out.kernel = options.kernel;
  out.eta = options.eta ? *options.eta : min_level_gap(eig);
  if (!(out.eta > 0.0)) throw Error(ErrorCode::invalid_argument, "broadening eta must be positive");
  out.bandwidth = eig.values[eig.dim() - 1] - eig.values[0];
  out.volume = eig.volume;
  out.window = window;
  out.omega = options.omega.empty()
                  ? log_grid(std::max(out.eta / 2.0, 1e-4), out.bandwidth, options.grid_points)
                  : options.omega;

  const double scale = eig.volume / static_cast<double>(window.size());
  std::vector<Transition> all;
  for (std::size_t n = window.begin; n < window.end; ++n) {
    auto t = state_transitions(op, eig, n, scale);
    all.insert(all.end(), t.begin(), t.end());
  }
  std::sort(all.begin(), all.end(), [](const Transition& a, const Transition& b) { return a.omega < b.omega; });
  out.values.reserve(out.omega.size());
  for (double w : out.omega) out.values.push_back(sum_kernel(all, out.kernel, out.eta, w));
  return out;
}

std::vector<double> spectral_function_state(const EigenbasisOperator& op, const EigenData& eig, std::size_t n,
                                            Kernel kernel, double eta, const std::vector<double>& omega) {
  check_shapes(op, eig);
  const auto transitions = state_transitions(op, eig, n, eig.volume);
  std::vector<double> out;
  out.reserve(omega.size());
  for (double w : omega) out.push_back(sum_kernel(transitions, kernel, eta, w));
  return out;
}

double integrate_spectral_function(const EigenbasisOperator& op, const EigenData& eig, std::size_t n, double eta) {
  check_shapes(op, eig);
  if (!(eta > 0.0)) throw Error(ErrorCode::invalid_argument, "broadening eta must be positive");
  const auto transitions = state_transitions(op, eig, n, eig.volume);
  if (transitions.empty()) return 0.0;

  constexpr double reach = 12.0;
  const double step = eta / 2.0;
  double total = 0.0;
  std::size_t i = 0;
  while (i < transitions.size()) {
    const double lo = transitions[i].omega - reach * eta;
    double hi = transitions[i].omega + reach * eta;
    while (i + 1 < transitions.size() && transitions[i + 1].omega - reach * eta <= hi)
      hi = transitions[++i].omega + reach * eta;
    ++i;
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    const double h = (hi - lo) / static_cast<double>(steps);
    for (std::size_t k = 0; k <= steps; ++k) {
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      total += w * h * sum_kernel(transitions, Kernel::gaussian, eta, lo + h * static_cast<double>(k));
    }
  }
  return total;
}

SusceptibilityResult fidelity_susceptibility(const EigenbasisOperator& op, const EigenData& eig) {
  check_shapes(op, eig);
  SusceptibilityResult out;
  out.dim = static_cast<std::size_t>(eig.dim());
  out.volume = eig.volume;
  out.chi.assign(out.dim, 0.0);
  for (Eigen::Index n = 0; n < eig.dim(); ++n) {
    double chi = 0.0;
    for (Eigen::Index m = 0; m < eig.dim(); ++m) {
      if (m == n) continue;
      const double w = eig.values[n] - eig.values[m];
      const double o2 = std::norm(op.elements(n, m));
      if (std::abs(w) < kDegeneratePair) {
        if (o2 > 0.0) ++out.skipped_pairs;
        continue;
      }
      chi += o2 / (w * w);
    }
    out.chi[static_cast<std::size_t>(n)] = eig.volume * chi;
  }
  double log_sum = 0.0;
  for (double c : out.chi) {
    if (c > 0.0) {
      log_sum += std::log(c);
      ++out.positive;
    } else {
      ++out.zero_states;
    }
  }
  if (out.positive == 0)
    throw Error(ErrorCode::diagonal_observable, op.name + " has no off-diagonal weight in sector " + op.sector);
  out.mean_log_chi = log_sum / static_cast<double>(out.positive);
  out.chi_typ = std::exp(out.mean_log_chi);
  if (out.dim >= 3) {
    IndexRange w{0, out.dim};
    try {
      w = central_window(out.dim, 0.2);
    } catch (const Error&) {
    }
    const auto last = static_cast<Eigen::Index>(w.end - 1);
    const auto first = static_cast<Eigen::Index>(w.begin);
    out.omega_h = (eig.values[last] - eig.values[first]) / static_cast<double>(w.size() - 1);
  }
  return out;
}

std::vector<std::pair<double, double>> diagonal_eev(const EigenbasisOperator& op, const EigenData& eig,
                                                    double fraction) {
  check_shapes(op, eig);
  const auto w = central_window(static_cast<std::size_t>(eig.dim()), fraction);
  std::vector<std::pair<double, double>> out;
  out.reserve(w.size());
  for (std::size_t n = w.begin; n < w.end; ++n) {
    const auto i = static_cast<Eigen::Index>(n);
    out.emplace_back(eig.values[i] / eig.volume, op.elements(i, i).real());
  }
  return out;
}

}  // namespace spinchaos
