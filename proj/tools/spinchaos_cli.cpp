// Command-line driver: diag, sweep, chi, sfunc, entropy, report.
//
// Long option names match RunConfig field names, so a TOML file passed with
// --config fills the same fields; explicit flags override it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinchaos/chaos_metrics.hpp"
#include "spinchaos/eigensolver.hpp"
#include "spinchaos/entanglement.hpp"
#include "spinchaos/error.hpp"
#include "spinchaos/observables.hpp"
#include "spinchaos/sweep.hpp"

using namespace spinchaos;
namespace fs = std::filesystem;

namespace {

struct Options {
  RunConfig config;
  std::string sectors = "all";
  std::string cache = "use";
  std::string omega_scope = "central";
  std::string kernel = "gaussian";
  std::vector<double> j_range;  // lo, hi, count
  bool no_mirrors = false;
  bool quiet = false;
};

void add_config_options(CLI::App* app, Options& o) {
  auto& c = o.config;
  app->set_config("--config", "", "TOML file with RunConfig fields at the root");
  app->add_option("--model", c.model, "h1d, h1dsw, h2dtfim or h2dpt")->capture_default_str();
  app->add_option("--lattices,--lattice", c.lattices, "chain:L or torus:LxxLy (repeatable)")->capture_default_str();
  app->add_option("--couplings,-J", c.couplings, "J values");
  app->add_option("--J_range", o.j_range, "lo hi count: log-spaced J grid appended to --couplings")->expected(3);
  app->add_option("--sectors", o.sectors, "all, nonreal or list")->capture_default_str();
  app->add_option("--sector_list,--sector", c.sector_list, "sector labels such as k=3,z2=-1 (with --sectors list)")
      ->delimiter(';');
  app->add_flag("--no_mirrors", o.no_mirrors, "ignore mirror subsectors on tori");
  app->add_flag("--merge_conjugates", c.merge_conjugates, "solve k only and count -k with weight 2");
  app->add_option("--r_fraction", c.r_fraction, "central window for r")->capture_default_str();
  app->add_option("--s_fraction", c.s_fraction, "central window for s_ave")->capture_default_str();
  app->add_option("--omega_scope", o.omega_scope, "mean spacing over the central r window or the full spectrum")
      ->capture_default_str();
  app->add_option("--kernel", o.kernel, "gaussian or lorentzian")->capture_default_str();
  app->add_option("--observables,--observable", c.observables, "v, u, znn, sz (repeatable)");
  app->add_flag("--entanglement", c.entanglement, "compute s_ave");
  app->add_option("--chi_rescale", c.chi_rescale, "rescaling of chi_typ, e.g. none, omega_h^2, omega_h*D/L")
      ->capture_default_str();
  app->add_option("--output_dir,-o", c.output_dir, "run directory")->capture_default_str();
  app->add_option("--cache", o.cache, "use, refresh or off")->capture_default_str();
  app->add_option("--workers", c.workers, "worker threads, 0 for all cores")->capture_default_str();
  app->add_flag("--quiet,-q", o.quiet, "suppress progress output");
}

RunConfig finish(Options& o) {
  auto c = o.config;
  c.sectors = parse_sector_selection(o.sectors);
  c.cache = parse_cache_policy(o.cache);
  c.omega_scope = parse_omega_scope(o.omega_scope);
  c.kernel = parse_kernel(o.kernel);
  c.mirrors = !o.no_mirrors;
  if (!o.j_range.empty()) {
    if (o.j_range[2] < 1) throw Error(ErrorCode::invalid_argument, "--J_range count must be positive");
    const auto grid = log_couplings(o.j_range[0], o.j_range[1], static_cast<std::size_t>(o.j_range[2]));
    c.couplings.insert(c.couplings.end(), grid.begin(), grid.end());
  }
  c.validate();
  return c;
}

Logger logger(const Options& o) {
  if (o.quiet) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::string file_tag(const std::string& lattice, double j) {
  std::string tag = lattice;
  for (char& ch : tag)
    if (ch == ':') ch = '_';
  return tag + "_J" + format_double(j);
}

// ----------------------------------------------------------------- diag

struct DiagOptions {
  bool vectors = false;
  bool validate = false;
  fs::path out;
};

int run_diag(Options& o, const DiagOptions& d) {
  if (o.config.sector_list.size() != 1 || o.config.lattices.size() != 1 || o.config.couplings.size() != 1)
    throw Error(ErrorCode::invalid_argument, "diag takes exactly one --lattice, one -J and one --sector");
  const auto config = finish(o);
  const auto lattice = Lattice::parse(config.lattices[0]);
  const auto sector = Sector::parse(config.sector_list[0]);
  const auto basis = SectorBasis::build(lattice, sector);
  const auto matrix = materialize(build_model(config.model, lattice, config.couplings[0]), basis);
  const bool need_vectors = d.vectors || d.validate;
  const auto eig = diagonalize(matrix, need_vectors ? SolveMode::values_and_vectors : SolveMode::values_only);
  std::printf("sector %s dim %lld\n", eig.sector.c_str(), static_cast<long long>(eig.dim()));
  if (eig.dim() >= 3) {
    const auto stats =
        r_statistics(eig.values, central_window(static_cast<std::size_t>(eig.dim()), config.r_fraction));
    std::printf("r_ave %.10g omega_h %.10g degenerate_pairs %zu\n", stats.r_ave, stats.omega_h, stats.degenerate_pairs);
  }
  if (d.validate) {
    const auto rep = validate(eig, matrix);
    std::printf("unitarity %.3g reconstruction %.3g trace %.3g %s\n", rep.unitarity, rep.reconstruction, rep.trace,
                rep.passed ? "ok" : "FAILED");
    if (!rep.passed) return 1;
  }
  if (!d.out.empty()) {
    if (d.out.has_parent_path()) fs::create_directories(d.out.parent_path());
    std::ofstream csv(d.out);
    if (!csv) throw Error(ErrorCode::io_error, "cannot write " + d.out.string());
    csv << "n,energy,energy_density\n";
    for (Eigen::Index n = 0; n < eig.dim(); ++n)
      csv << n << ',' << format_double(eig.values[n]) << ',' << format_double(eig.values[n] / eig.volume) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- sweep

int report_summary(const RunSummary& s) {
  std::fprintf(stderr, "%zu tasks, %zu diagonalizations, %zu cache hits, %zu failed\n", s.tasks, s.diagonalizations,
               s.cache_hits, s.failed);
  for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return s.failed == 0 ? 0 : 1;
}

nlohmann::json to_json(const CrossoverFit& fit) {
  auto law = [](const std::optional<PowerLawFit>& f) -> nlohmann::json {
    if (!f) return nullptr;
    return {{"a", f->a}, {"b", f->b}, {"residual", f->residual}, {"points", f->points}};
  };
  nlohmann::json peaks = nlohmann::json::array();
  for (const auto& p : fit.peaks)
    peaks.push_back({{"lattice", p.lattice},
                     {"sites", p.sites},
                     {"j_star", p.j_star},
                     {"scaled_peak", p.scaled_peak},
                     {"chi_star", p.chi_star},
                     {"omega_h", p.omega_h}});
  return {{"observable", fit.observable},
          {"rescale", fit.rescale},
          {"peaks", peaks},
          {"j_star_vs_L", law(fit.j_star_vs_l)},
          {"chi_star_vs_omega_h", law(fit.chi_star_vs_omega)},
          {"rejected", fit.rejected}};
}

int run_chi(Options& o) {
  if (o.config.observables.empty()) o.config.observables = {"v"};
  const auto config = finish(o);
  const auto summary = plan_and_run(config, logger(o));
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& obs : config.observables) {
    const auto fit = fit_crossover(summary.records, obs, config.chi_rescale);
    for (const auto& p : fit.peaks)
      std::printf("%s %s J* %.6g chi* %.6g omega_h %.6g\n", obs.c_str(), p.lattice.c_str(), p.j_star, p.chi_star,
                  p.omega_h);
    for (const auto& r : fit.rejected) std::printf("%s %s no interior peak\n", obs.c_str(), r.c_str());
    if (fit.j_star_vs_l) std::printf("%s J* = %.4g L^%.4g\n", obs.c_str(), fit.j_star_vs_l->a, fit.j_star_vs_l->b);
    if (fit.chi_star_vs_omega)
      std::printf("%s chi* = %.4g omega_h^%.4g\n", obs.c_str(), fit.chi_star_vs_omega->a, fit.chi_star_vs_omega->b);
    doc.push_back(to_json(fit));
  }
  write_json(config.output_dir / "crossover.json", doc);
  return report_summary(summary);
}

// ---------------------------------------------------------------- sfunc

struct GridOptions {
  std::size_t points = 200;
  double omega_min = 0.0;  // 0: max(eta_max / 2, 1e-4)
  double omega_max = 0.0;  // 0: smallest sector bandwidth
};

int run_sfunc(Options& o, const GridOptions& g) {
  if (o.config.observables.empty()) o.config.observables = {"v"};
  const auto config = finish(o);
  const auto log = logger(o);
  std::size_t failed = 0;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& lat_text : config.lattices) {
    const auto lattice = Lattice::parse(lat_text);
    for (double j : config.couplings)
      for (const auto& obs : config.observables) {
        try {
          const auto sectors = solve_sectors(config, lattice, j, obs);
          std::vector<double> grid;
          if (g.omega_min > 0.0 || g.omega_max > 0.0) {
            const auto probe = pooled_spectral_function(sectors, config.kernel, {1.0});
            const double lo = g.omega_min > 0.0 ? g.omega_min : std::max(probe.eta_max / 2.0, 1e-4);
            const double hi = g.omega_max > 0.0 ? g.omega_max : probe.bandwidth;
            grid = log_grid(lo, hi, g.points);
          }
          const auto f = pooled_spectral_function(sectors, config.kernel, grid, config.r_fraction, g.points);
          const auto name = "sfunc_" + file_tag(lattice.label(), j) + "_" + obs + ".csv";
          fs::create_directories(config.output_dir);
          std::ofstream csv(config.output_dir / name);
          csv << "omega,omega_over_J,F\n";
          for (std::size_t i = 0; i < f.omega.size(); ++i)
            csv << format_double(f.omega[i]) << ',' << format_double(f.omega[i] / j) << ','
                << format_double(f.values[i]) << '\n';
          if (!csv) throw Error(ErrorCode::io_error, "cannot write " + name);
          std::vector<std::string> labels;
          for (const auto& s : sectors) labels.push_back(s.label + "*" + std::to_string(s.multiplicity));
          index.push_back({{"file", name},
                           {"model", config.model},
                           {"lattice", lattice.label()},
                           {"J", j},
                           {"observable", obs},
                           {"kernel", to_string(config.kernel)},
                           {"eta_min", f.eta_min},
                           {"eta_max", f.eta_max},
                           {"bandwidth", f.bandwidth},
                           {"window_fraction", config.r_fraction},
                           {"sectors", labels}});
          if (log) log("sfunc " + name);
        } catch (const std::exception& e) {
          ++failed;
          std::fprintf(stderr, "failed: %s J=%g %s: %s\n", lat_text.c_str(), j, obs.c_str(), e.what());
        }
      }
  }
  write_json(config.output_dir / "sfunc.json", index);
  return failed == 0 ? 0 : 1;
}

// -------------------------------------------------------------- entropy

int run_entropy(Options& o, double fraction) {
  const auto config = finish(o);
  const auto log = logger(o);
  std::size_t failed = 0;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& lat_text : config.lattices) {
    const auto lattice = Lattice::parse(lat_text);
    const Cut cut = Cut::half(lattice);
    for (double j : config.couplings) {
      try {
        const auto sectors = solve_sectors(config, lattice, j, "sz");
        const auto name = "entropy_" + file_tag(lattice.label(), j) + ".csv";
        fs::create_directories(config.output_dir);
        std::ofstream csv(config.output_dir / name);
        csv << "sector,multiplicity,n,energy,energy_density,entropy,s,sz\n";
        for (const auto& s : sectors) {
          const auto window = central_window(static_cast<std::size_t>(s.eig.dim()), fraction);
          const auto ent = spinchaos::s_ave(s.eig, s.basis, cut, window);
          for (std::size_t i = 0; i < window.size(); ++i) {
            const auto n = static_cast<Eigen::Index>(window.begin + i);
            csv << '"' << s.label << "\"," << s.multiplicity << ',' << n << ',' << format_double(s.eig.values[n])
                << ',' << format_double(ent.energy_density[i]) << ',' << format_double(ent.entropy[i]) << ','
                << format_double(ent.normalized[i]) << ',' << format_double(s.op.elements(n, n).real()) << '\n';
          }
        }
        if (!csv) throw Error(ErrorCode::io_error, "cannot write " + name);
        index.push_back({{"file", name},
                         {"model", config.model},
                         {"lattice", lattice.label()},
                         {"J", j},
                         {"cut", cut.description},
                         {"window_fraction", fraction}});
        if (log) log("entropy " + name);
      } catch (const std::exception& e) {
        ++failed;
        std::fprintf(stderr, "failed: %s J=%g: %s\n", lat_text.c_str(), j, e.what());
      }
    }
  }
  write_json(config.output_dir / "entropy.json", index);
  return failed == 0 ? 0 : 1;
}

// --------------------------------------------------------------- report

int run_report(const fs::path& run, std::string rescale, fs::path out) {
  if (rescale.empty()) {
    std::ifstream in(run / "manifest.json");
    if (!in) throw Error(ErrorCode::io_error, "no manifest.json in " + run.string());
    rescale = nlohmann::json::parse(in).value("chi_rescale", std::string("none"));
  }
  if (out.empty()) out = run / "report.csv";
  const auto records = read_records(run / "records.csv");
  std::set<std::string> observables;
  for (const auto& r : records)
    for (const auto& [name, value] : r.chi_typ) observables.insert(name);
  std::ofstream csv(out);
  if (!csv) throw Error(ErrorCode::io_error, "cannot write " + out.string());
  csv << "model,lattice,sites,J,dim,r_ave,s_ave,omega_h,status";
  for (const auto& o : observables) csv << ",chi_typ_" << o << ",chi_scaled_" << o;
  csv << '\n';
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (r.status == "failed") ++failed;
    if (r.sector != "aggregate") continue;
    csv << r.model << ",\"" << r.lattice << "\"," << r.sites << ',' << format_double(r.coupling) << ',' << r.dim
        << ',' << (r.r_ave ? format_double(*r.r_ave) : "") << ',' << (r.s_ave ? format_double(*r.s_ave) : "") << ','
        << format_double(r.omega_h) << ',' << r.status;
    for (const auto& o : observables) {
      auto it = r.chi_typ.find(o);
      if (it == r.chi_typ.end()) {
        csv << ",,";
        continue;
      }
      const double scale = chi_rescale_factor(rescale, r.omega_h, r.sites, static_cast<double>(r.dim));
      csv << ',' << format_double(it->second) << ',' << format_double(it->second * scale);
    }
    csv << '\n';
  }
  std::fprintf(stderr, "wrote %s (rescale %s)\n", out.string().c_str(), rescale.c_str());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact diagonalization of strong-field spin models"};
  app.set_version_flag("--version", SPINCHAOS_VERSION);
  app.require_subcommand(1);
  // Shared RunConfig options live on the top-level app so that a TOML file's
  // root keys map onto them; fallthrough lets them follow the subcommand.
  Options opts;
  add_config_options(&app, opts);
  app.fallthrough();

  DiagOptions diag;
  auto* diag_cmd = app.add_subcommand("diag", "diagonalize one symmetry sector (--lattice, -J, --sector)");
  diag_cmd->add_flag("--vectors", diag.vectors, "also compute eigenvectors");
  diag_cmd->add_flag("--validate", diag.validate, "check unitarity and reconstruction");
  diag_cmd->add_option("--values_out", diag.out, "CSV of eigenvalues");

  auto* sweep_cmd = app.add_subcommand("sweep", "r_ave, s_ave and chi_typ over a (lattice, J, sector) grid");
  auto* chi_cmd = app.add_subcommand("chi", "susceptibility sweep with peak and power-law fits");

  GridOptions grid;
  auto* sfunc_cmd = app.add_subcommand("sfunc", "sector-averaged spectral functions");
  sfunc_cmd->add_option("--grid_points", grid.points)->capture_default_str();
  sfunc_cmd->add_option("--omega_min", grid.omega_min, "lower grid end (default max(eta/2, 1e-4))");
  sfunc_cmd->add_option("--omega_max", grid.omega_max, "upper grid end (default bandwidth)");

  double scan_fraction = 1.0;
  auto* entropy_cmd = app.add_subcommand("entropy", "per-eigenstate entanglement and magnetization scans");
  entropy_cmd->add_option("--scan_fraction", scan_fraction, "central fraction of each sector to scan")
      ->capture_default_str();

  fs::path report_run = "run";
  fs::path report_out;
  std::string report_rescale;
  auto* report_cmd = app.add_subcommand("report", "aggregate rows of a run as CSV with rescaled chi_typ");
  report_cmd->add_option("--run", report_run, "run directory")->capture_default_str();
  report_cmd->add_option("--rescale", report_rescale, "rescaling expression (default: the run's manifest)");
  report_cmd->add_option("--out", report_out, "output CSV (default <run>/report.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*diag_cmd) return run_diag(opts, diag);
    if (*sweep_cmd) {
      const auto config = finish(opts);
      return report_summary(plan_and_run(config, logger(opts)));
    }
    if (*chi_cmd) return run_chi(opts);
    if (*sfunc_cmd) return run_sfunc(opts, grid);
    if (*entropy_cmd) return run_entropy(opts, scan_fraction);
    if (*report_cmd) return run_report(report_run, report_rescale, report_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
