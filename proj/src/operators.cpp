#include "spinchaos/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spinchaos/error.hpp"

namespace spinchaos {

namespace {

using TermKey = std::vector<PauliFactor>;

// Single-site algebra over {I, z, +, -}; x is rewritten as + plus -.
enum SiteOp : int { kI = -1, kZ = 0, kPlus = 1, kMinus = 2 };

struct SiteTerm {
  double c;
  int op;
};

// a * b (a applied after b).
std::vector<SiteTerm> site_product(int a, int b) {
  if (a == kI) return {{1.0, b}};
  if (b == kI) return {{1.0, a}};
  switch (a) {
    case kZ:
      if (b == kZ) return {{1.0, kI}};
      if (b == kPlus) return {{1.0, kPlus}};
      return {{-1.0, kMinus}};
    case kPlus:
      if (b == kZ) return {{-1.0, kPlus}};
      if (b == kPlus) return {};
      return {{0.5, kI}, {0.5, kZ}};
    default:  // minus
      if (b == kZ) return {{1.0, kMinus}};
      if (b == kMinus) return {};
      return {{0.5, kI}, {-0.5, kZ}};
  }
}

struct Partial {
  double c;
  TermKey factors;
};

// Product of two x-free terms, expanded into x-free terms.
std::vector<Partial> term_product(const PauliTerm& a, const PauliTerm& b) {
  std::vector<Partial> out{{a.coefficient * b.coefficient, {}}};
  std::size_t i = 0, j = 0;
  while (i < a.factors.size() || j < b.factors.size()) {
    int site;
    int op_a = kI, op_b = kI;
    if (j >= b.factors.size() || (i < a.factors.size() && a.factors[i].site < b.factors[j].site)) {
      site = a.factors[i].site;
      op_a = static_cast<int>(a.factors[i++].op);
    } else if (i >= a.factors.size() || b.factors[j].site < a.factors[i].site) {
      site = b.factors[j].site;
      op_b = static_cast<int>(b.factors[j++].op);
    } else {
      site = a.factors[i].site;
      op_a = static_cast<int>(a.factors[i++].op);
      op_b = static_cast<int>(b.factors[j++].op);
    }
    const auto local = site_product(op_a, op_b);
    std::vector<Partial> next;
    next.reserve(out.size() * local.size());
    for (const auto& p : out)
      for (const auto& l : local) {
        Partial q{p.c * l.c, p.factors};
        if (l.op != kI) q.factors.push_back({site, static_cast<PauliOp>(l.op)});
        next.push_back(std::move(q));
      }
    out = std::move(next);
    if (out.empty()) break;
  }
  return out;
}

std::vector<Partial> expand_x(const PauliTerm& term, double scale) {
  std::vector<Partial> out{{term.coefficient * scale, {}}};
  for (const auto& f : term.factors) {
    if (f.op != PauliOp::x) {
      for (auto& p : out) p.factors.push_back(f);
      continue;
    }
    std::vector<Partial> next;
    for (const auto& p : out)
      for (PauliOp op : {PauliOp::plus, PauliOp::minus}) {
        Partial q = p;
        q.factors.push_back({f.site, op});
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

std::vector<PauliTerm> merge(const std::vector<Partial>& parts, double tolerance) {
  std::map<TermKey, double> sums;
  double scale = 0.0;
  for (const auto& p : parts) {
    sums[p.factors] += p.c;
    scale = std::max(scale, std::abs(p.c));
  }
  std::vector<PauliTerm> out;
  for (auto& [key, c] : sums)
    if (std::abs(c) > tolerance * scale) out.push_back({c, key});
  return out;
}

std::map<TermKey, double> term_map(const OperatorSpec& spec) {
  std::map<TermKey, double> out;
  for (const auto& t : spec.simplified().terms) out[t.factors] += t.coefficient;
  return out;
}

TermKey adjoint_key(const TermKey& key) {
  TermKey out = key;
  for (auto& f : out) {
    if (f.op == PauliOp::plus)
      f.op = PauliOp::minus;
    else if (f.op == PauliOp::minus)
      f.op = PauliOp::plus;
  }
  return out;
}

PauliTerm make_term(double c, std::initializer_list<PauliFactor> factors) {
  PauliTerm t{c, factors};
  std::sort(t.factors.begin(), t.factors.end());
  return t;
}

void require_chain(const Lattice& lattice, const char* what) {
  if (!lattice.is_chain()) throw Error(ErrorCode::invalid_lattice, std::string(what) + " is defined on chains");
}

void require_torus(const Lattice& lattice, const char* what) {
  if (lattice.is_chain()) throw Error(ErrorCode::invalid_lattice, std::string(what) + " is defined on tori");
}

std::vector<std::pair<int, int>> pair_bonds(const Lattice& lattice) {
  auto bonds = lattice.nn_bonds();
  auto nnn = lattice.nnn_bonds();
  bonds.insert(bonds.end(), nnn.begin(), nnn.end());
  return bonds;
}

char op_char(PauliOp op) {
  switch (op) {
    case PauliOp::z: return 'z';
    case PauliOp::plus: return '+';
    case PauliOp::minus: return '-';
    case PauliOp::x: return 'x';
  }
  return '?';
}

PauliOp op_from_string(const std::string& s) {
  if (s == "z") return PauliOp::z;
  if (s == "+") return PauliOp::plus;
  if (s == "-") return PauliOp::minus;
  if (s == "x") return PauliOp::x;
  throw Error(ErrorCode::invalid_operator, "unknown Pauli factor '" + s + "'");
}

}  // namespace

// ------------------------------------------------------------ spec algebra

void OperatorSpec::validate() const {
  const int n = lattice.sites();
  for (const auto& t : terms) {
    if (!std::isfinite(t.coefficient) || t.coefficient == 0.0)
      throw Error(ErrorCode::invalid_operator, name + ": coefficient must be finite and nonzero");
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
      if (t.factors[i].site < 0 || t.factors[i].site >= n)
        throw Error(ErrorCode::invalid_operator, name + ": factor site outside the lattice");
      if (i > 0 && t.factors[i].site <= t.factors[i - 1].site)
        throw Error(ErrorCode::invalid_operator, name + ": factors must have distinct, sorted sites");
    }
  }
  if (!std::isfinite(normalization) || normalization == 0.0)
    throw Error(ErrorCode::invalid_operator, name + ": normalization must be finite and nonzero");

  const auto map = term_map(*this);
  const double sign = anti_hermitian ? -1.0 : 1.0;
  for (const auto& [key, c] : map) {
    auto it = map.find(adjoint_key(key));
    const double partner = it == map.end() ? 0.0 : it->second;
    if (std::abs(partner - sign * c) > 1e-12 * std::max(1.0, std::abs(c)))
      throw Error(ErrorCode::invalid_operator,
                  name + (anti_hermitian ? ": term list is not anti-Hermitian" : ": term list is not Hermitian"));
  }
}

OperatorSpec OperatorSpec::simplified(double tolerance) const {
  std::vector<Partial> parts;
  for (const auto& t : terms) {
    auto e = expand_x(t, 1.0 / normalization);
    parts.insert(parts.end(), e.begin(), e.end());
  }
  OperatorSpec out = *this;
  out.terms = merge(parts, tolerance);
  out.normalization = 1.0;
  return out;
}

OperatorSpec operator+(const OperatorSpec& a, const OperatorSpec& b) {
  if (!(a.lattice == b.lattice)) throw Error(ErrorCode::invalid_operator, "operators live on different lattices");
  if (!a.empty() && !b.empty() && a.anti_hermitian != b.anti_hermitian)
    throw Error(ErrorCode::invalid_operator, "cannot add Hermitian and anti-Hermitian operators");
  const auto sa = a.simplified();
  const auto sb = b.simplified();
  std::vector<Partial> parts;
  for (const auto* s : {&sa, &sb})
    for (const auto& t : s->terms) parts.push_back({t.coefficient, t.factors});
  OperatorSpec out = a;
  out.name = "(" + a.name + " + " + b.name + ")";
  out.terms = merge(parts, 1e-14);
  out.normalization = 1.0;
  out.anti_hermitian = a.empty() ? b.anti_hermitian : a.anti_hermitian;
  out.conserves_magnetization = a.conserves_magnetization && b.conserves_magnetization;
  out.conserves_z2 = a.conserves_z2 && b.conserves_z2;
  out.translation_invariant = a.translation_invariant && b.translation_invariant;
  return out;
}

OperatorSpec operator*(double scale, const OperatorSpec& a) {
  OperatorSpec out = a.simplified();
  out.name = std::to_string(scale) + "*" + a.name;
  if (scale == 0.0) {
    out.terms.clear();
    return out;
  }
  for (auto& t : out.terms) t.coefficient *= scale;
  return out;
}

OperatorSpec commutator(const OperatorSpec& a, const OperatorSpec& b) {
  if (!(a.lattice == b.lattice)) throw Error(ErrorCode::invalid_operator, "operators live on different lattices");
  const auto sa = a.simplified();
  const auto sb = b.simplified();
  std::vector<Partial> parts;
  for (const auto& ta : sa.terms)
    for (const auto& tb : sb.terms) {
      bool overlap = false;
      for (std::size_t i = 0, j = 0; i < ta.factors.size() && j < tb.factors.size();) {
        if (ta.factors[i].site == tb.factors[j].site) {
          overlap = true;
          break;
        }
        ta.factors[i].site < tb.factors[j].site ? ++i : ++j;
      }
      if (!overlap) continue;
      for (auto& p : term_product(ta, tb)) parts.push_back(std::move(p));
      for (auto& p : term_product(tb, ta)) parts.push_back({-p.c, std::move(p.factors)});
    }
  OperatorSpec out{"[" + a.name + ", " + b.name + "]", a.lattice, {}};
  out.terms = merge(parts, 1e-14);
  out.anti_hermitian = a.anti_hermitian == b.anti_hermitian;
  out.conserves_magnetization = a.conserves_magnetization && b.conserves_magnetization;
  out.conserves_z2 = a.conserves_z2 && b.conserves_z2;
  out.translation_invariant = a.translation_invariant && b.translation_invariant;
  return out;
}

// ------------------------------------------------------------------ models

OperatorSpec build_h0(const Lattice& lattice) {
  OperatorSpec spec{"h0", lattice, {}};
  for (int i = 0; i < lattice.sites(); ++i) spec.terms.push_back(make_term(1.0, {{i, PauliOp::z}}));
  spec.conserves_magnetization = true;
  return spec;
}

OperatorSpec build_pair_perturbation(const Lattice& lattice) {
  require_chain(lattice, "pair perturbation V");
  OperatorSpec spec{"V", lattice, {}};
  for (auto [i, j] : pair_bonds(lattice)) {
    spec.terms.push_back(make_term(1.0, {{i, PauliOp::plus}, {j, PauliOp::plus}}));
    spec.terms.push_back(make_term(1.0, {{i, PauliOp::minus}, {j, PauliOp::minus}}));
  }
  return spec;
}

OperatorSpec build_h1d(const Lattice& lattice, double coupling) {
  require_chain(lattice, "h1d");
  OperatorSpec spec = build_h0(lattice);
  spec.name = "h1d";
  spec.conserves_magnetization = coupling == 0.0;
  if (coupling == 0.0) return spec;
  for (auto [i, j] : pair_bonds(lattice)) {
    spec.terms.push_back(make_term(4.0 * coupling, {{i, PauliOp::plus}, {j, PauliOp::plus}}));
    spec.terms.push_back(make_term(4.0 * coupling, {{i, PauliOp::minus}, {j, PauliOp::minus}}));
  }
  return spec;
}

OperatorSpec build_sw_generator(const Lattice& lattice, double coupling) {
  require_chain(lattice, "SW generator");
  OperatorSpec spec{"S", lattice, {}};
  spec.anti_hermitian = true;
  const double g = 4.0 * coupling;
  if (g == 0.0) return spec;
  for (auto [i, j] : pair_bonds(lattice)) {
    spec.terms.push_back(make_term(g / 4.0, {{i, PauliOp::plus}, {j, PauliOp::plus}}));
    spec.terms.push_back(make_term(-g / 4.0, {{i, PauliOp::minus}, {j, PauliOp::minus}}));
  }
  return spec;
}

OperatorSpec build_h1dsw(const Lattice& lattice, double coupling) {
  require_chain(lattice, "h1dsw");
  const int n = lattice.sites();
  if (n < 5) throw Error(ErrorCode::invalid_lattice, "h1dsw needs L >= 5 so the four neighbours are distinct");
  OperatorSpec spec{"h1dsw", lattice, {}};
  spec.conserves_magnetization = true;
  const double j2 = coupling * coupling;
  for (int i = 0; i < n; ++i) spec.terms.push_back(make_term(1.0 + 8.0 * j2, {{i, PauliOp::z}}));
  if (j2 == 0.0) return spec;
  for (int i = 0; i < n; ++i) {
    const int nb[4] = {lattice.site(i - 2), lattice.site(i - 1), lattice.site(i + 1), lattice.site(i + 2)};
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        spec.terms.push_back(make_term(4.0 * j2, {{i, PauliOp::z}, {nb[a], PauliOp::plus}, {nb[b], PauliOp::minus}}));
        spec.terms.push_back(make_term(4.0 * j2, {{i, PauliOp::z}, {nb[a], PauliOp::minus}, {nb[b], PauliOp::plus}}));
      }
  }
  return spec;
}

OperatorSpec build_h2dtfim(const Lattice& lattice, double coupling) {
  require_torus(lattice, "h2dtfim");
  OperatorSpec spec = build_h0(lattice);
  spec.name = "h2dtfim";
  spec.conserves_magnetization = coupling == 0.0;
  if (coupling == 0.0) return spec;
  for (auto [i, j] : lattice.nn_bonds())
    spec.terms.push_back(make_term(coupling, {{i, PauliOp::x}, {j, PauliOp::x}}));
  return spec;
}

OperatorSpec build_h2dpt(const Lattice& lattice, double coupling) {
  require_torus(lattice, "h2dpt");
  OperatorSpec spec = build_h0(lattice);
  spec.name = "h2dpt";
  if (coupling == 0.0) return spec;
  for (auto [i, j] : lattice.nn_bonds()) {
    spec.terms.push_back(make_term(coupling, {{i, PauliOp::plus}, {j, PauliOp::minus}}));
    spec.terms.push_back(make_term(coupling, {{i, PauliOp::minus}, {j, PauliOp::plus}}));
  }
  return spec;
}

OperatorSpec build_parity(const Lattice& lattice) {
  OperatorSpec spec{"z2", lattice, {}};
  PauliTerm t{1.0, {}};
  for (int i = 0; i < lattice.sites(); ++i) t.factors.push_back({i, PauliOp::z});
  spec.terms.push_back(std::move(t));
  spec.conserves_magnetization = true;
  return spec;
}

OperatorSpec build_observable(const std::string& name, const Lattice& lattice) {
  if (name == "v") {
    if (!lattice.is_chain()) throw Error(ErrorCode::invalid_operator, "observable v is defined on chains");
    OperatorSpec spec = build_pair_perturbation(lattice);
    spec.name = "v";
    spec.normalization = lattice.sites();
    return spec;
  }
  if (name == "u") {
    if (lattice.is_chain()) throw Error(ErrorCode::invalid_operator, "observable u is defined on tori");
    OperatorSpec spec{"u", lattice, {}};
    for (auto [i, j] : lattice.nn_bonds()) {
      spec.terms.push_back(make_term(1.0, {{i, PauliOp::plus}, {j, PauliOp::plus}}));
      spec.terms.push_back(make_term(1.0, {{i, PauliOp::minus}, {j, PauliOp::minus}}));
    }
    spec.normalization = lattice.sites();
    return spec;
  }
  if (name == "znn") {
    OperatorSpec spec{"znn", lattice, {}};
    const auto bonds = lattice.nn_bonds();
    for (auto [i, j] : bonds) spec.terms.push_back(make_term(1.0, {{i, PauliOp::z}, {j, PauliOp::z}}));
    spec.normalization = static_cast<double>(bonds.size());
    spec.conserves_magnetization = true;
    return spec;
  }
  if (name == "sz") {
    OperatorSpec spec = build_h0(lattice);
    spec.name = "sz";
    return spec;
  }
  throw Error(ErrorCode::invalid_operator, "unknown observable '" + name + "' (expected v, u, znn, sz)");
}

OperatorSpec build_model(const std::string& model, const Lattice& lattice, double coupling) {
  if (model == "h1d") return build_h1d(lattice, coupling);
  if (model == "h1dsw") return build_h1dsw(lattice, coupling);
  if (model == "h2dtfim") return build_h2dtfim(lattice, coupling);
  if (model == "h2dpt") return build_h2dpt(lattice, coupling);
  if (model == "h0") return build_h0(lattice);
  throw Error(ErrorCode::invalid_operator, "unknown model '" + model + "' (expected h1d, h1dsw, h2dtfim, h2dpt)");
}

// ---------------------------------------------------------------- matrices

std::optional<std::pair<SpinState, double>> apply_term(const PauliTerm& term, SpinState state) {
  double amp = term.coefficient;
  for (const auto& f : term.factors) {
    const SpinState mask = SpinState{1} << f.site;
    const bool up = state & mask;
    switch (f.op) {
      case PauliOp::z:
        if (!up) amp = -amp;
        break;
      case PauliOp::plus:
        if (up) return std::nullopt;
        state |= mask;
        break;
      case PauliOp::minus:
        if (!up) return std::nullopt;
        state &= ~mask;
        break;
      case PauliOp::x:
        state ^= mask;
        break;
    }
  }
  return std::pair{state, amp};
}

SectorMatrix materialize(const OperatorSpec& spec, const SectorBasis& basis) {
  spec.validate();
  if (!(spec.lattice == basis.lattice()))
    throw Error(ErrorCode::dimension_mismatch, spec.name + " and the basis live on different lattices");
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  const auto reps = basis.representatives();
  const auto norms = basis.norms();
  const int n = basis.lattice().sites();

  SectorMatrix out;
  out.sector = basis.label();
  out.source = spec.name;
  out.volume = n;
  out.entries = Eigen::MatrixXcd::Zero(dim, dim);
  const double inv_norm = 1.0 / spec.normalization;
  for (Eigen::Index col = 0; col < dim; ++col) {
    const SpinState r = reps[col];
    for (const auto& term : spec.terms) {
      auto image = apply_term(term, r);
      if (!image) continue;
      auto loc = basis.locate(image->first);
      if (!loc) {
        if ((popcount(image->first) ^ popcount(r)) & 1)
          throw Error(ErrorCode::invalid_operator, spec.name + " does not preserve the Z2 sector");
        continue;
      }
      const auto row = static_cast<Eigen::Index>(loc->index);
      out.entries(row, col) += image->second * inv_norm * loc->phase * (norms[row] / norms[col]);
    }
  }

  const double sign = spec.anti_hermitian ? -1.0 : 1.0;
  const double deviation =
      dim == 0 ? 0.0 : (out.entries - sign * out.entries.adjoint()).cwiseAbs().maxCoeff();
  if (deviation > 1e-12)
    throw Error(ErrorCode::invalid_operator,
                spec.name + " materialized with (anti-)Hermiticity deviation " + std::to_string(deviation) +
                    " in sector " + out.sector + "; the operator breaks a sector symmetry");
  return out;
}

// ----------------------------------------------------------- serialization

nlohmann::json to_json(const OperatorSpec& spec) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : spec.terms) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : t.factors) factors.push_back({f.site, std::string(1, op_char(f.op))});
    terms.push_back({{"c", t.coefficient}, {"f", factors}});
  }
  return {{"name", spec.name},
          {"lattice", spec.lattice.label()},
          {"normalization", spec.normalization},
          {"anti_hermitian", spec.anti_hermitian},
          {"conserves_magnetization", spec.conserves_magnetization},
          {"conserves_z2", spec.conserves_z2},
          {"translation_invariant", spec.translation_invariant},
          {"terms", terms}};
}

OperatorSpec operator_from_json(const nlohmann::json& doc) {
  try {
    OperatorSpec spec{doc.at("name").get<std::string>(), Lattice::parse(doc.at("lattice").get<std::string>()), {}};
    spec.normalization = doc.value("normalization", 1.0);
    spec.anti_hermitian = doc.value("anti_hermitian", false);
    spec.conserves_magnetization = doc.value("conserves_magnetization", false);
    spec.conserves_z2 = doc.value("conserves_z2", true);
    spec.translation_invariant = doc.value("translation_invariant", true);
    for (const auto& t : doc.at("terms")) {
      PauliTerm term{t.at("c").get<double>(), {}};
      for (const auto& f : t.at("f"))
        term.factors.push_back({f.at(0).get<int>(), op_from_string(f.at(1).get<std::string>())});
      spec.terms.push_back(std::move(term));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_operator, std::string("malformed operator document: ") + e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fingerprint(const OperatorSpec& spec) { return fnv1a(to_json(spec).dump()); }

}  // namespace spinchaos
