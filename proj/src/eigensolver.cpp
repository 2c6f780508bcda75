#include "spinchaos/eigensolver.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "spinchaos/error.hpp"

namespace spinchaos {

EigenData diagonalize(const SectorMatrix& matrix, SolveMode mode) {
  const Eigen::Index dim = matrix.entries.rows();
  if (matrix.entries.cols() != dim)
    throw Error(ErrorCode::dimension_mismatch, "sector matrix " + matrix.sector + " is not square");

  EigenData out;
  out.sector = matrix.sector;
  out.volume = matrix.volume;
  out.values.resize(dim);
  if (dim == 0) return out;

  const int options = mode == SolveMode::values_only ? Eigen::EigenvaluesOnly : Eigen::ComputeEigenvectors;
  Eigen::ComputationInfo info = Eigen::Success;
  if (matrix.entries.imag().cwiseAbs().maxCoeff() == 0.0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix.entries.real(), options);
    info = solver.info();
    if (info == Eigen::Success) {
      out.values = solver.eigenvalues();
      if (mode == SolveMode::values_and_vectors) out.vectors = solver.eigenvectors().cast<cplx>();
    }
  } else {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix.entries, options);
    info = solver.info();
    if (info == Eigen::Success) {
      out.values = solver.eigenvalues();
      if (mode == SolveMode::values_and_vectors) out.vectors = solver.eigenvectors();
    }
  }
  if (info != Eigen::Success)
    throw Error(ErrorCode::solver_failure, "eigendecomposition of sector " + matrix.sector + " did not converge");
  return out;
}

ValidationReport validate(const EigenData& data, const SectorMatrix& matrix, double unitarity_tol,
                          double reconstruction_tol) {
  const Eigen::Index dim = matrix.entries.rows();
  if (data.dim() != dim || !data.has_vectors() || data.vectors.rows() != dim)
    throw Error(ErrorCode::dimension_mismatch, "eigen data does not match sector matrix " + matrix.sector);
  ValidationReport report;
  if (dim == 0) {
    report.passed = true;
    return report;
  }
  const auto& u = data.vectors;
  const Eigen::MatrixXcd gram = u.adjoint() * u;
  report.unitarity = (gram - Eigen::MatrixXcd::Identity(dim, u.cols())).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd rebuilt = u * data.values.cast<cplx>().asDiagonal() * u.adjoint();
  const double scale = std::max(matrix.entries.cwiseAbs().maxCoeff(), 1e-300);
  report.reconstruction = (matrix.entries - rebuilt).cwiseAbs().maxCoeff() / scale;
  report.trace = std::abs(data.values.sum() - matrix.entries.trace().real()) / static_cast<double>(dim);
  report.passed = u.cols() == dim && report.unitarity <= unitarity_tol &&
                  report.reconstruction <= reconstruction_tol && report.trace <= 1e-8;
  return report;
}

// ------------------------------------------------------------------- cache

namespace {

void put_le(std::ofstream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

bool get_le(std::ifstream& in, double& value) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  value = std::bit_cast<double>(bits);
  return true;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_cache(const std::filesystem::path& stem, const EigenData& data, const std::string& model,
                 double coupling) {
  std::filesystem::create_directories(stem.parent_path());
  auto bin = stem;
  bin += ".bin";
  auto tmp = bin;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    for (Eigen::Index i = 0; i < data.dim(); ++i) put_le(out, data.values[i]);
    for (Eigen::Index c = 0; c < data.vectors.cols(); ++c)
      for (Eigen::Index r = 0; r < data.vectors.rows(); ++r) {
        put_le(out, data.vectors(r, c).real());
        put_le(out, data.vectors(r, c).imag());
      }
    if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, bin);

  nlohmann::json sidecar = {{"format_version", kCacheFormatVersion},
                            {"dim", data.dim()},
                            {"has_vectors", data.has_vectors()},
                            {"sector", data.sector},
                            {"volume", data.volume},
                            {"model", model},
                            {"J", coupling},
                            {"fingerprint", hex64(data.fingerprint)}};
  auto json_path = stem;
  json_path += ".json";
  std::ofstream out(json_path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + json_path.string());
  out << sidecar.dump(2) << '\n';
}

std::optional<EigenData> read_cache(const std::filesystem::path& stem, std::uint64_t expected_fingerprint,
                                    bool need_vectors) {
  auto json_path = stem;
  json_path += ".json";
  auto bin = stem;
  bin += ".bin";
  std::ifstream meta_in(json_path);
  if (!meta_in) return std::nullopt;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
    if (meta.at("format_version").get<int>() != kCacheFormatVersion) return std::nullopt;
    if (meta.at("fingerprint").get<std::string>() != hex64(expected_fingerprint)) return std::nullopt;
    if (need_vectors && !meta.at("has_vectors").get<bool>()) return std::nullopt;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }

  EigenData data;
  data.sector = meta.value("sector", "");
  data.volume = meta.value("volume", 0.0);
  data.fingerprint = expected_fingerprint;
  const auto dim = meta.at("dim").get<Eigen::Index>();
  const bool vectors = meta.at("has_vectors").get<bool>();
  std::ifstream in(bin, std::ios::binary);
  if (!in) return std::nullopt;
  data.values.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    if (!get_le(in, data.values[i])) return std::nullopt;
  if (vectors && need_vectors) {
    data.vectors.resize(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c)
      for (Eigen::Index r = 0; r < dim; ++r) {
        double re = 0.0, im = 0.0;
        if (!get_le(in, re) || !get_le(in, im)) return std::nullopt;
        data.vectors(r, c) = cplx(re, im);
      }
  }
  return data;
}

}  // namespace spinchaos
