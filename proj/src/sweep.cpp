#include "spinchaos/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "spinchaos/chaos_metrics.hpp"
#include "spinchaos/eigensolver.hpp"
#include "spinchaos/entanglement.hpp"
#include "spinchaos/error.hpp"
#include "spinchaos/lattice.hpp"
#include "spinchaos/operators.hpp"

namespace spinchaos {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------- enums

SectorSelection parse_sector_selection(const std::string& s) {
  if (s == "list") return SectorSelection::list;
  if (s == "all") return SectorSelection::all;
  if (s == "nonreal" || s == "nonreal-momenta") return SectorSelection::nonreal_momenta;
  throw Error(ErrorCode::invalid_argument, "sector selection must be list, all or nonreal (got '" + s + "')");
}

CachePolicy parse_cache_policy(const std::string& s) {
  if (s == "use") return CachePolicy::use;
  if (s == "refresh") return CachePolicy::refresh;
  if (s == "off") return CachePolicy::off;
  throw Error(ErrorCode::invalid_argument, "cache policy must be use, refresh or off (got '" + s + "')");
}

OmegaScope parse_omega_scope(const std::string& s) {
  if (s == "central") return OmegaScope::central;
  if (s == "full") return OmegaScope::full;
  throw Error(ErrorCode::invalid_argument, "omega_h scope must be central or full (got '" + s + "')");
}

std::string to_string(SectorSelection s) {
  switch (s) {
    case SectorSelection::list: return "list";
    case SectorSelection::all: return "all";
    case SectorSelection::nonreal_momenta: return "nonreal";
  }
  return "?";
}

std::string to_string(CachePolicy c) {
  switch (c) {
    case CachePolicy::use: return "use";
    case CachePolicy::refresh: return "refresh";
    case CachePolicy::off: return "off";
  }
  return "?";
}

std::string to_string(OmegaScope s) { return s == OmegaScope::central ? "central" : "full"; }

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
  static const std::vector<std::string> models{"h1d", "h1dsw", "h2dtfim", "h2dpt"};
  if (std::find(models.begin(), models.end(), model) == models.end())
    throw Error(ErrorCode::invalid_argument, "unknown model '" + model + "'");
  if (lattices.empty()) throw Error(ErrorCode::invalid_argument, "no lattice given");
  for (double j : couplings)
    if (!(j > 0.0) || !std::isfinite(j))
      throw Error(ErrorCode::invalid_argument, "coupling values must be positive and finite");
  for (double f : {r_fraction, s_fraction})
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorCode::invalid_window, "window fractions must lie in (0, 1]");
  if (workers < 0) throw Error(ErrorCode::invalid_argument, "worker count must be nonnegative");
  if (sectors == SectorSelection::list && sector_list.empty())
    throw Error(ErrorCode::invalid_sector, "sector selection 'list' needs at least one sector");
  for (const auto& text : lattices) {
    const auto lattice = Lattice::parse(text);
    const bool chain_model = model == "h1d" || model == "h1dsw";
    if (chain_model != lattice.is_chain())
      throw Error(ErrorCode::invalid_lattice, "model " + model + " does not run on " + text);
    if (sectors == SectorSelection::list)
      for (const auto& s : sector_list) validate_sector(lattice, Sector::parse(s));
    for (const auto& obs : observables) build_observable(obs, lattice);
  }
  chi_rescale_factor(chi_rescale, 1.0, 1.0, 1.0);
}

std::vector<double> log_couplings(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  return log_grid(lo, hi, count);
}

std::vector<std::pair<Sector, int>> select_sectors(const RunConfig& config, const Lattice& lattice) {
  std::vector<Sector> base;
  if (config.sectors == SectorSelection::list) {
    for (const auto& s : config.sector_list) base.push_back(Sector::parse(s));
  } else {
    base = all_sectors(lattice, config.mirrors);
  }
  const auto real_k = [&](const Sector& s) {
    return (2 * s.kx) % lattice.lx() == 0 && (2 * s.ky) % lattice.ly() == 0;
  };
  std::vector<std::pair<Sector, int>> out;
  for (const auto& s : base) {
    if (config.sectors == SectorSelection::nonreal_momenta && real_k(s)) continue;
    if (!config.merge_conjugates || real_k(s)) {
      out.emplace_back(s, 1);
      continue;
    }
    Sector partner = s;
    partner.kx = (lattice.lx() - s.kx) % lattice.lx();
    partner.ky = (lattice.ly() - s.ky) % lattice.ly();
    if (std::pair(partner.ky, partner.kx) < std::pair(s.ky, s.kx)) continue;
    out.emplace_back(s, 2);
  }
  return out;
}

std::vector<SolvedSector> solve_sectors(const RunConfig& config, const Lattice& lattice, double coupling,
                                        const std::string& observable) {
  const auto h = build_model(config.model, lattice, coupling);
  const auto o = build_observable(observable, lattice);
  std::vector<SolvedSector> out;
  for (const auto& [sector, mult] : select_sectors(config, lattice)) {
    auto basis = SectorBasis::build(lattice, sector);
    if (basis.dim() == 0) continue;
    auto eig = diagonalize(materialize(h, basis));
    auto op = to_eigenbasis(materialize(o, basis), eig);
    out.push_back({sector, sector.label(lattice), mult, std::move(basis), std::move(eig), std::move(op)});
  }
  return out;
}

PooledSpectrum pooled_spectral_function(const std::vector<SolvedSector>& sectors, Kernel kernel,
                                        std::vector<double> omega, double fraction, std::size_t grid_points) {
  if (sectors.empty()) throw Error(ErrorCode::invalid_argument, "no sectors to pool");
  PooledSpectrum out;
  out.kernel = kernel;
  out.eta_min = std::numeric_limits<double>::infinity();
  out.bandwidth = std::numeric_limits<double>::infinity();
  for (const auto& s : sectors) {
    const double eta = min_level_gap(s.eig);
    out.eta_min = std::min(out.eta_min, eta);
    out.eta_max = std::max(out.eta_max, eta);
    out.bandwidth = std::min(out.bandwidth, s.eig.values[s.eig.dim() - 1] - s.eig.values[0]);
  }
  if (omega.empty()) omega = log_grid(std::max(out.eta_max / 2.0, 1e-4), out.bandwidth, grid_points);
  out.omega = omega;
  out.values.assign(omega.size(), 0.0);
  double total = 0.0;
  SpectralOptions opt;
  opt.kernel = kernel;
  opt.omega = std::move(omega);
  for (const auto& s : sectors) {
    const auto f = spectral_function(s.op, s.eig, central_window(static_cast<std::size_t>(s.eig.dim()), fraction), opt);
    const double w = s.multiplicity * static_cast<double>(s.eig.dim());
    for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] += w * f.values[i];
    total += w;
  }
  for (double& v : out.values) v /= total;
  return out;
}

// ---------------------------------------------------------------- csv

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ':' || c == ',' || c == '=' || c == ' ') c = '_';
  return s;
}

std::string ratio_key(const std::string& lattice, double j, const std::string& sector) {
  return lattice + "|" + format_double(j) + "|" + sector;
}

// ---------------------------------------------------------------- tasks

struct Task {
  std::size_t lattice_index;
  std::string lattice;
  double coupling;
  Sector sector;
  int multiplicity;
};

struct TaskOutput {
  SweepRecord record;
  SectorPayload payload;
  std::string source;  // computed | cache | failed
  std::vector<std::string> warnings;
};

// Fills out as it goes so a failure keeps whatever was already known.
void run_task(const Task& task, const RunConfig& config, TaskOutput& out) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto& rec = out.record;
  rec.model = config.model;
  rec.coupling = task.coupling;
  rec.lattice = task.lattice;
  rec.multiplicity = task.multiplicity;
  const Lattice lattice = Lattice::parse(task.lattice);
  rec.sites = lattice.sites();
  rec.sector = task.sector.label(lattice);

  const SectorBasis basis = SectorBasis::build(lattice, task.sector);
  rec.dim = basis.dim();
  if (rec.dim == 0) {
    rec.status = "empty";
    out.source = "empty";
    return;
  }
  const OperatorSpec hamiltonian = build_model(config.model, lattice, task.coupling);
  const std::uint64_t fp = fnv1a(lattice.label() + "|" + rec.sector, fingerprint(hamiltonian));
  const bool need_vectors = !config.observables.empty() || config.entanglement;

  const fs::path stem = config.output_dir / "spectra" / sanitize(task.lattice) /
                        (config.model + "_J" + format_double(task.coupling) + "_" + sanitize(rec.sector));
  std::optional<EigenData> eig;
  if (config.cache == CachePolicy::use) {
    eig = read_cache(stem, fp, need_vectors);
    if (!eig && fs::exists(fs::path(stem).concat(".json")))
      out.warnings.push_back("cache entry " + stem.string() + " is stale or lacks vectors; recomputing");
  }
  out.source = eig ? "cache" : "computed";
  if (!eig) {
    const SectorMatrix h = materialize(hamiltonian, basis);
    eig = diagonalize(h, need_vectors ? SolveMode::values_and_vectors : SolveMode::values_only);
    eig->fingerprint = fp;
    if (config.cache != CachePolicy::off) write_cache(stem, *eig, config.model, task.coupling);
  }

  const auto dim = static_cast<std::size_t>(eig->dim());
  const IndexRange r_window = central_window(dim, config.r_fraction);
  const SpectrumStats stats = r_statistics(eig->values, r_window);
  rec.r_ave = stats.r_ave;
  rec.degenerate_pairs = stats.degenerate_pairs;
  out.payload.ratios = stats.ratios;
  rec.omega_h = config.omega_scope == OmegaScope::central
                    ? stats.omega_h
                    : (eig->values[eig->dim() - 1] - eig->values[0]) / static_cast<double>(dim - 1);
  if (stats.degenerate_pairs > 0)
    out.warnings.push_back(task.lattice + " J=" + format_double(task.coupling) + " " + rec.sector + ": " +
                           std::to_string(stats.degenerate_pairs) + " degenerate level pairs in the window");

  if (config.entanglement) {
    const auto s = s_ave(*eig, basis, Cut::half(lattice), central_window(dim, config.s_fraction));
    rec.s_ave = s.s_ave;
  }
  for (const auto& name : config.observables) {
    const auto op = to_eigenbasis(materialize(build_observable(name, lattice), basis), *eig);
    auto chi = fidelity_susceptibility(op, *eig);
    rec.chi_typ[name] = chi.chi_typ;
    rec.skipped_pairs += chi.skipped_pairs;
    out.payload.chi[name] = std::move(chi.chi);
  }
  rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
}

void write_records(const fs::path& path, const std::vector<SweepRecord>& records,
                   const std::vector<std::string>& observables) {
  std::ofstream out(path, std::ios::binary);
  out << "model,lattice,sites,J,sector,multiplicity,dim,r_ave,s_ave,omega_h,degenerate_pairs,skipped_pairs,status";
  for (const auto& o : observables) out << ",chi_typ_" << o;
  out << ",constituents\n";
  for (const auto& r : records) {
    out << r.model << ',' << csv_field(r.lattice) << ',' << r.sites << ',' << format_double(r.coupling) << ','
        << csv_field(r.sector) << ',' << r.multiplicity << ',' << r.dim << ',' << opt_field(r.r_ave) << ','
        << opt_field(r.s_ave) << ',' << format_double(r.omega_h) << ',' << r.degenerate_pairs << ','
        << r.skipped_pairs << ',' << r.status;
    for (const auto& o : observables) {
      auto it = r.chi_typ.find(o);
      out << ',' << (it == r.chi_typ.end() ? std::string{} : format_double(it->second));
    }
    out << ',' << csv_field(join(r.constituents, ';')) << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "failed to write " + path.string());
}

}  // namespace

// ---------------------------------------------------------------- aggregation

SweepRecord aggregate_records(const std::vector<SweepRecord>& sectors, const std::vector<SectorPayload>& payloads) {
  if (sectors.empty() || sectors.size() != payloads.size())
    throw Error(ErrorCode::invalid_argument, "aggregation needs matching records and payloads");
  SweepRecord agg;
  agg.model = sectors.front().model;
  agg.coupling = sectors.front().coupling;
  agg.lattice = sectors.front().lattice;
  agg.sites = sectors.front().sites;
  agg.sector = "aggregate";

  double r_sum = 0.0, r_count = 0.0;
  double s_sum = 0.0, s_weight = 0.0;
  double w_sum = 0.0, w_weight = 0.0;
  bool all_r = true, all_s = true, any_failed = false;
  std::map<std::string, std::pair<double, double>> chi_logs;  // sum ln chi, count
  for (std::size_t i = 0; i < sectors.size(); ++i) {
    const auto& rec = sectors[i];
    if (rec.status == "empty") continue;
    if (rec.status != "ok") {
      any_failed = true;
      continue;
    }
    const double mult = rec.multiplicity;
    const double weight = mult * static_cast<double>(rec.dim);
    agg.constituents.push_back(rec.multiplicity == 1 ? rec.sector : rec.sector + "*" + std::to_string(rec.multiplicity));
    agg.dim += static_cast<std::size_t>(rec.multiplicity) * rec.dim;
    agg.degenerate_pairs += static_cast<std::size_t>(rec.multiplicity) * rec.degenerate_pairs;
    agg.skipped_pairs += static_cast<std::size_t>(rec.multiplicity) * rec.skipped_pairs;
    agg.seconds += rec.seconds;
    if (rec.r_ave) {
      for (double r : payloads[i].ratios) r_sum += mult * r;
      r_count += mult * static_cast<double>(payloads[i].ratios.size());
    } else {
      all_r = false;
    }
    if (rec.s_ave) {
      s_sum += weight * *rec.s_ave;
      s_weight += weight;
    } else {
      all_s = false;
    }
    w_sum += weight * rec.omega_h;
    w_weight += weight;
    for (const auto& [name, chis] : payloads[i].chi) {
      auto& acc = chi_logs[name];
      for (double c : chis) {
        if (c <= 0.0) continue;
        acc.first += mult * std::log(c);
        acc.second += mult;
      }
    }
  }
  if (agg.constituents.empty()) {
    agg.status = "failed";
    return agg;
  }
  agg.status = any_failed ? "partial" : "ok";
  if (all_r && r_count > 0) agg.r_ave = r_sum / r_count;
  if (all_s && s_weight > 0) agg.s_ave = s_sum / s_weight;
  agg.omega_h = w_sum / w_weight;
  for (const auto& [name, acc] : chi_logs)
    if (acc.second > 0) agg.chi_typ[name] = std::exp(acc.first / acc.second);
  return agg;
}

// ---------------------------------------------------------------- run

RunSummary plan_and_run(const RunConfig& config, const Logger& log_fn) {
  config.validate();
  const Logger log = log_fn ? log_fn : Logger([](const std::string&) {});
  fs::create_directories(config.output_dir);

  std::vector<Task> tasks;
  for (std::size_t li = 0; li < config.lattices.size(); ++li) {
    const Lattice lattice = Lattice::parse(config.lattices[li]);
    const auto sectors = select_sectors(config, lattice);
    for (double j : config.couplings)
      for (const auto& [sector, mult] : sectors) tasks.push_back({li, lattice.label(), j, sector, mult});
  }

  std::vector<TaskOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        run_task(tasks[i], config, outputs[i]);
      } catch (const std::exception& e) {
        auto& rec = outputs[i].record;
        if (rec.sector.empty()) {
          const Lattice lattice = Lattice::parse(tasks[i].lattice);
          rec.model = config.model;
          rec.coupling = tasks[i].coupling;
          rec.lattice = tasks[i].lattice;
          rec.sites = lattice.sites();
          rec.sector = tasks[i].sector.label(lattice);
          rec.multiplicity = tasks[i].multiplicity;
        }
        rec.r_ave.reset();
        rec.s_ave.reset();
        rec.chi_typ.clear();
        outputs[i].payload = {};
        rec.status = "failed";
        outputs[i].source = "failed";
        outputs[i].warnings.push_back(tasks[i].lattice + " J=" + format_double(tasks[i].coupling) + " " + rec.sector +
                                      " failed: " + e.what());
      }
      std::lock_guard lock(log_mutex);
      log("[" + std::to_string(i + 1) + "/" + std::to_string(tasks.size()) + "] " + outputs[i].record.lattice +
          " J=" + format_double(outputs[i].record.coupling) + " " + outputs[i].record.sector + " " +
          outputs[i].source);
      for (const auto& w : outputs[i].warnings) log("warning: " + w);
    }
  };
  unsigned n_workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, std::max<std::size_t>(tasks.size(), 1));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunSummary summary;
  summary.tasks = tasks.size();
  std::vector<SweepRecord> aggregates;
  std::ofstream ratios(config.output_dir / "ratios.csv", std::ios::binary);
  std::ofstream timings(config.output_dir / "timings.csv", std::ios::binary);
  std::ofstream task_log(config.output_dir / "tasks.log", std::ios::binary);
  ratios << "lattice,J,sector,r\n";
  timings << "lattice,J,sector,source,seconds\n";
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& o = outputs[i];
    summary.records.push_back(o.record);
    summary.failed += o.source == "failed";
    summary.diagonalizations += o.source == "computed";
    summary.cache_hits += o.source == "cache";
    summary.warnings.insert(summary.warnings.end(), o.warnings.begin(), o.warnings.end());
    task_log << o.record.lattice << " J=" << format_double(o.record.coupling) << " " << o.record.sector << " "
             << o.source << "\n";
    timings << csv_field(o.record.lattice) << ',' << format_double(o.record.coupling) << ','
            << csv_field(o.record.sector) << ',' << o.source << ',' << o.record.seconds << '\n';
    for (double r : o.payload.ratios)
      ratios << csv_field(o.record.lattice) << ',' << format_double(o.record.coupling) << ','
             << csv_field(o.record.sector) << ',' << format_double(r) << '\n';
  }
  // Tasks of one (lattice, J) are contiguous in plan order.
  for (std::size_t i = 0; i < tasks.size();) {
    std::size_t j = i;
    std::vector<SweepRecord> group;
    std::vector<SectorPayload> payloads;
    while (j < tasks.size() && tasks[j].lattice_index == tasks[i].lattice_index &&
           tasks[j].coupling == tasks[i].coupling) {
      group.push_back(outputs[j].record);
      payloads.push_back(outputs[j].payload);
      ++j;
    }
    aggregates.push_back(aggregate_records(group, payloads));
    i = j;
  }
  summary.records.insert(summary.records.end(), aggregates.begin(), aggregates.end());
  write_records(config.output_dir / "records.csv", summary.records, config.observables);

  json manifest;
  manifest["format_version"] = 1;
  manifest["code_version"] = SPINCHAOS_VERSION;
  manifest["config"] = {{"model", config.model},
                        {"lattices", config.lattices},
                        {"couplings", config.couplings},
                        {"sectors", to_string(config.sectors)},
                        {"sector_list", config.sector_list},
                        {"mirrors", config.mirrors},
                        {"merge_conjugates", config.merge_conjugates},
                        {"r_fraction", config.r_fraction},
                        {"s_fraction", config.s_fraction},
                        {"omega_scope", to_string(config.omega_scope)},
                        {"kernel", to_string(config.kernel)},
                        {"observables", config.observables},
                        {"entanglement", config.entanglement},
                        {"chi_rescale", config.chi_rescale},
                        {"cache", to_string(config.cache)},
                        {"workers", config.workers}};
  manifest["chi_rescale"] = config.chi_rescale;
  manifest["outputs"] = {"records.csv", "ratios.csv", "timings.csv", "tasks.log", "spectra/"};
  manifest["tasks"] = summary.tasks;
  manifest["failed"] = summary.failed;
  manifest["diagonalizations"] = summary.diagonalizations;
  manifest["cache_hits"] = summary.cache_hits;
  manifest["warnings"] = summary.warnings;
  std::ofstream(config.output_dir / "manifest.json") << manifest.dump(2) << '\n';
  return summary;
}

// ---------------------------------------------------------------- readers

std::vector<SweepRecord> read_records(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"model", "lattice", "sites", "J", "sector", "multiplicity", "dim", "r_ave", "s_ave",
                           "omega_h", "degenerate_pairs", "skipped_pairs", "status", "constituents"})
    if (!col.count(need)) throw Error(ErrorCode::io_error, csv.string() + " lacks column '" + need + "'");
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw Error(ErrorCode::io_error, "ragged row in " + csv.string());
    SweepRecord r;
    r.model = f[col["model"]];
    r.lattice = f[col["lattice"]];
    r.sites = std::stoi(f[col["sites"]]);
    r.coupling = std::stod(f[col["J"]]);
    r.sector = f[col["sector"]];
    r.multiplicity = std::stoi(f[col["multiplicity"]]);
    r.dim = std::stoul(f[col["dim"]]);
    if (!f[col["r_ave"]].empty()) r.r_ave = std::stod(f[col["r_ave"]]);
    if (!f[col["s_ave"]].empty()) r.s_ave = std::stod(f[col["s_ave"]]);
    r.omega_h = std::stod(f[col["omega_h"]]);
    r.degenerate_pairs = std::stoul(f[col["degenerate_pairs"]]);
    r.skipped_pairs = std::stoul(f[col["skipped_pairs"]]);
    r.status = f[col["status"]];
    for (const auto& [name, idx] : col)
      if (name.rfind("chi_typ_", 0) == 0 && !f[idx].empty()) r.chi_typ[name.substr(8)] = std::stod(f[idx]);
    std::stringstream cs(f[col["constituents"]]);
    for (std::string item; std::getline(cs, item, ';');) r.constituents.push_back(item);
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, std::vector<double>> read_ratios(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::vector<double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorCode::io_error, "ragged row in " + csv.string());
    out[ratio_key(f[0], std::stod(f[1]), f[2])].push_back(std::stod(f[3]));
  }
  return out;
}

// ---------------------------------------------------------------- fits

namespace {

struct Parabola {
  double x0, x1, d1, c, y0;
  double operator()(double x) const { return y0 + d1 * (x - x0) + c * (x - x0) * (x - x1); }
};

Parabola log_parabola(const std::vector<double>& x, const std::vector<double>& y, std::size_t i) {
  double lx[3], ly[3];
  for (int k = 0; k < 3; ++k) {
    const double xv = x[i - 1 + k], yv = y[i - 1 + k];
    if (!(xv > 0.0) || !(yv > 0.0)) throw Error(ErrorCode::fit_error, "log-log fit needs positive data");
    lx[k] = std::log(xv);
    ly[k] = std::log(yv);
  }
  const double d1 = (ly[1] - ly[0]) / (lx[1] - lx[0]);
  const double d2 = (ly[2] - ly[1]) / (lx[2] - lx[1]);
  return {lx[0], lx[1], d1, (d2 - d1) / (lx[2] - lx[0]), ly[0]};
}

}  // namespace

Peak locate_peak(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw Error(ErrorCode::fit_error, "peak location needs at least three (J, value) points");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw Error(ErrorCode::fit_error, "peak location needs strictly ascending J");
  const auto i = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (i == 0 || i + 1 == x.size())
    throw Error(ErrorCode::peak_at_edge, "maximum at J = " + format_double(x[i]) +
                                             " is on the edge of the grid; extend the J range past it");
  const Parabola p = log_parabola(x, y, i);
  if (!(p.c < 0.0)) throw Error(ErrorCode::fit_error, "no strict maximum around J = " + format_double(x[i]));
  // p(x) = y0 + d1 (x - x0) + c (x - x0)(x - x1) has its vertex at:
  const double xv = (p.x0 + p.x1) / 2.0 - p.d1 / (2.0 * p.c);
  return {std::exp(xv), std::exp(p(xv)), i};
}

double interpolate_log_quadratic(const std::vector<double>& x, const std::vector<double>& y, std::size_t index,
                                 double x0) {
  if (index == 0 || index + 1 >= x.size() || x.size() != y.size())
    throw Error(ErrorCode::fit_error, "interpolation index needs two neighbours");
  return std::exp(log_parabola(x, y, index)(std::log(x0)));
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw Error(ErrorCode::fit_error, "power-law fit needs at least three points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::fit_error, "power-law fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
    sx += lx.back();
    sy += ly.back();
  }
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::fit_error, "power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.b = sxy / sxx;
  fit.a = std::exp(my - fit.b * mx);
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double d = ly[i] - (my + fit.b * (lx[i] - mx));
    ss += d * d;
  }
  fit.residual = std::sqrt(ss / n);
  fit.points = x.size();
  return fit;
}

double chi_rescale_factor(const std::string& expression, double omega_h, double sites, double dim) {
  if (expression == "none" || expression == "1") return 1.0;
  double factor = 1.0;
  std::size_t pos = 0;
  char op = '*';
  while (pos <= expression.size()) {
    const std::size_t end = expression.find_first_of("*/", pos);
    std::string token = expression.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    std::string name = token;
    double power = 1.0;
    if (const auto caret = token.find('^'); caret != std::string::npos) {
      name = token.substr(0, caret);
      try {
        std::size_t used = 0;
        power = std::stod(token.substr(caret + 1), &used);
        if (used != token.size() - caret - 1) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_argument, "bad exponent in rescale term '" + token + "'");
      }
    }
    double base = 0.0;
    if (name == "omega_h")
      base = omega_h;
    else if (name == "L")
      base = sites;
    else if (name == "D")
      base = dim;
    else
      throw Error(ErrorCode::invalid_argument, "rescale term '" + token + "' must be omega_h, L or D (with ^power)");
    factor *= std::pow(base, op == '*' ? power : -power);
    if (end == std::string::npos) break;
    op = expression[end];
    pos = end + 1;
  }
  return factor;
}

CrossoverFit fit_crossover(const std::vector<SweepRecord>& records, const std::string& observable,
                           const std::string& rescale) {
  CrossoverFit fit;
  fit.observable = observable;
  fit.rescale = rescale;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRecord*>> by_lattice;
  for (const auto& r : records) {
    if (r.sector != "aggregate" || r.status != "ok" || !r.chi_typ.count(observable)) continue;
    if (!by_lattice.count(r.lattice)) order.push_back(r.lattice);
    by_lattice[r.lattice].push_back(&r);
  }
  for (const auto& name : order) {
    auto rows = by_lattice[name];
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->coupling < b->coupling; });
    std::vector<double> js, scaled, raw, omegas;
    for (const auto* r : rows) {
      js.push_back(r->coupling);
      raw.push_back(r->chi_typ.at(observable));
      omegas.push_back(r->omega_h);
      scaled.push_back(raw.back() * chi_rescale_factor(rescale, r->omega_h, r->sites, static_cast<double>(r->dim)));
    }
    try {
      const Peak peak = locate_peak(js, scaled);
      CrossoverPoint p;
      p.lattice = name;
      p.sites = rows.front()->sites;
      p.j_star = peak.x;
      p.scaled_peak = peak.y;
      p.chi_star = interpolate_log_quadratic(js, raw, peak.index, peak.x);
      p.omega_h = interpolate_log_quadratic(js, omegas, peak.index, peak.x);
      fit.peaks.push_back(p);
    } catch (const Error& e) {
      fit.rejected.push_back(name + ": " + e.what());
    }
  }
  if (fit.peaks.size() >= 3) {
    std::vector<double> ls, jstars, omegas, chis;
    for (const auto& p : fit.peaks) {
      ls.push_back(p.sites);
      jstars.push_back(p.j_star);
      omegas.push_back(p.omega_h);
      chis.push_back(p.chi_star);
    }
    fit.j_star_vs_l = fit_power_law(ls, jstars);
    fit.chi_star_vs_omega = fit_power_law(omegas, chis);
  }
  return fit;
}

}  // namespace spinchaos
