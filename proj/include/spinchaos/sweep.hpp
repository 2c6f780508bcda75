#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinchaos/basis.hpp"
#include "spinchaos/observables.hpp"

namespace spinchaos {

enum class SectorSelection {
  list,            // RunConfig::sector_list
  all,
  nonreal_momenta  // every sector except those with k in {0, pi} (both axes on a torus)
};

enum class CachePolicy {
  use,      // read on fingerprint match, write otherwise
  refresh,  // always recompute, then write
  off
};

enum class OmegaScope { central, full };

SectorSelection parse_sector_selection(const std::string& s);
CachePolicy parse_cache_policy(const std::string& s);
OmegaScope parse_omega_scope(const std::string& s);
std::string to_string(SectorSelection s);
std::string to_string(CachePolicy c);
std::string to_string(OmegaScope s);

struct RunConfig {
  std::string model = "h1d";
  std::vector<std::string> lattices{"chain:12"};
  std::vector<double> couplings;
  SectorSelection sectors = SectorSelection::all;
  std::vector<std::string> sector_list;
  bool mirrors = true;            // use mirror subsectors on tori at k = (0, 0)
  bool merge_conjugates = false;  // solve k only, count -k with weight 2
  double r_fraction = 0.2;
  double s_fraction = 0.2;
  OmegaScope omega_scope = OmegaScope::central;
  Kernel kernel = Kernel::gaussian;
  std::vector<std::string> observables;
  bool entanglement = false;
  std::string chi_rescale = "none";  // peak location is unchanged by J-independent factors
  std::filesystem::path output_dir = "run";
  CachePolicy cache = CachePolicy::use;
  int workers = 0;  // 0: hardware concurrency

  void validate() const;
};

/// J values log-spaced from lo to hi inclusive.
std::vector<double> log_couplings(double lo, double hi, std::size_t count);

/// Sectors selected by a config for one lattice, with their multiplicity.
std::vector<std::pair<Sector, int>> select_sectors(const RunConfig& config, const Lattice& lattice);

/// One diagonalized sector with an observable in its eigenbasis.
struct SolvedSector {
  Sector sector;
  std::string label;
  int multiplicity = 1;
  SectorBasis basis;
  EigenData eig;
  EigenbasisOperator op;
};

/// Diagonalizes every nonempty sector selected by config (model, sectors,
/// merge_conjugates, mirrors) for one lattice and J, with eigenvectors.
std::vector<SolvedSector> solve_sectors(const RunConfig& config, const Lattice& lattice, double coupling,
                                        const std::string& observable);

struct PooledSpectrum {
  std::vector<double> omega;
  std::vector<double> values;  // sum_s w_s F_s / sum_s w_s with w_s = multiplicity * D_s
  Kernel kernel = Kernel::gaussian;
  double eta_min = 0.0;        // smallest and largest per-sector eta
  double eta_max = 0.0;
  double bandwidth = 0.0;      // smallest sector bandwidth
};

/// Sector-weighted F_ave over the central `fraction` of each sector. Each
/// sector keeps its own eta (min_level_gap). An empty grid means log-spaced
/// points from max(eta_max/2, 1e-4) to the smallest bandwidth.
PooledSpectrum pooled_spectral_function(const std::vector<SolvedSector>& sectors, Kernel kernel,
                                        std::vector<double> omega = {}, double fraction = 0.2,
                                        std::size_t grid_points = 200);

struct SweepRecord {
  std::string model;
  double coupling = 0.0;
  std::string lattice;
  int sites = 0;
  std::string sector;  // "aggregate" for combined rows
  int multiplicity = 1;
  std::size_t dim = 0;
  std::optional<double> r_ave;
  std::optional<double> s_ave;
  std::map<std::string, double> chi_typ;  // keyed by observable
  double omega_h = 0.0;
  std::size_t degenerate_pairs = 0;
  std::size_t skipped_pairs = 0;
  std::string status = "ok";
  std::vector<std::string> constituents;  // aggregate rows only
  double seconds = 0.0;                   // wall time, kept out of records.csv
};

/// Per-sector data kept alongside each record for aggregation.
struct SectorPayload {
  std::vector<double> ratios;
  std::map<std::string, std::vector<double>> chi;
};

struct RunSummary {
  std::vector<SweepRecord> records;  // sector rows in plan order, then aggregates
  std::size_t tasks = 0;
  std::size_t failed = 0;
  std::size_t diagonalizations = 0;
  std::size_t cache_hits = 0;
  std::vector<std::string> warnings;
};

using Logger = std::function<void(const std::string&)>;

/// Executes every (lattice, J, sector) task on a bounded worker pool and
/// writes manifest.json, records.csv, ratios.csv, timings.csv, tasks.log and
/// the spectra/ cache under config.output_dir.
RunSummary plan_and_run(const RunConfig& config, const Logger& log = {});

/// Combines sector rows for one (lattice, J): r_ave pooled over all ratios,
/// s_ave and omega_h weighted by multiplicity * D_s, chi_typ as the geometric
/// mean over the pooled eigenstates.
SweepRecord aggregate_records(const std::vector<SweepRecord>& sectors, const std::vector<SectorPayload>& payloads);

/// Reads a records.csv written by plan_and_run.
std::vector<SweepRecord> read_records(const std::filesystem::path& csv);

/// Reads ratios.csv: key "lattice|J|sector" -> r_n list.
std::map<std::string, std::vector<double>> read_ratios(const std::filesystem::path& csv);

std::string format_double(double v);

struct Peak {
  double x = 0.0;  // J*
  double y = 0.0;  // value at the vertex
  std::size_t index = 0;  // grid index of the sampled maximum
};

/// Vertex of the parabola through the sampled maximum of ln y vs ln x and its
/// two neighbours. Throws Error(peak_at_edge) when the maximum is the first or
/// last point.
Peak locate_peak(const std::vector<double>& x, const std::vector<double>& y);

/// exp of the same three-point parabola in (ln x, ln y), evaluated at x0.
double interpolate_log_quadratic(const std::vector<double>& x, const std::vector<double>& y, std::size_t index,
                                 double x0);

struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;  // rms deviation in ln y
  std::size_t points = 0;
};

/// Least squares y = a x^b on (ln x, ln y).
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// Parses a product of powers of omega_h, L, D (e.g. "omega_h^2", "omega_h*D/L",
/// "none") and evaluates it.
double chi_rescale_factor(const std::string& expression, double omega_h, double sites, double dim);

struct CrossoverPoint {
  std::string lattice;
  int sites = 0;
  double j_star = 0.0;
  double scaled_peak = 0.0;  // rescaled chi_typ at the vertex
  double chi_star = 0.0;     // raw chi_typ at J*
  double omega_h = 0.0;      // omega_h at J*
};

struct CrossoverFit {
  std::string observable;
  std::string rescale;
  std::vector<CrossoverPoint> peaks;
  std::optional<PowerLawFit> j_star_vs_l;
  std::optional<PowerLawFit> chi_star_vs_omega;
  std::vector<std::string> rejected;  // lattices whose peak could not be located
};

/// Locates the rescaled chi_typ peak of each lattice's aggregate rows and fits
/// J* = a L^b and chi* = a omega_h^b when at least three peaks exist.
CrossoverFit fit_crossover(const std::vector<SweepRecord>& records, const std::string& observable,
                           const std::string& rescale);

}  // namespace spinchaos
