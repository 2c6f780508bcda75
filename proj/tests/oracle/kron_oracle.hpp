#pragma once

// Reference Hamiltonians assembled from 2x2 Pauli matrices by explicit
// Kronecker products. Shares no code with the library's Pauli-string path.
// Basis index s = sum_i b_i 2^i with b_i = 1 meaning sigma^z_i = +1, so the
// product runs site N-1 (leftmost factor) down to site 0.

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Local basis order {down, up}.
inline Mat pauli(char which) {
  Mat m = Mat::Zero(2, 2);
  switch (which) {
    case 'z': m(0, 0) = -1; m(1, 1) = 1; break;
    case 'x': m(0, 1) = 1; m(1, 0) = 1; break;
    case '+': m(1, 0) = 1; break;
    case '-': m(0, 1) = 1; break;
    default: m = Mat::Identity(2, 2);
  }
  return m;
}

/// Product of single-site operators; sites not listed carry the identity.
inline Mat product(int n, const std::vector<std::pair<int, char>>& factors) {
  Mat out = Mat::Identity(1, 1);
  for (int site = n - 1; site >= 0; --site) {
    Mat local = Mat::Identity(2, 2);
    for (const auto& [s, op] : factors)
      if (s == site) local = local * pauli(op);
    out = kron(out, local);
  }
  return out;
}

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

/// Geometric bonds of a periodic chain at distance d, each unordered pair once.
inline std::vector<std::pair<int, int>> chain_bonds(int l, int d) {
  std::set<std::pair<int, int>> s;
  for (int i = 0; i < l; ++i) {
    const int j = wrap(i + d, l);
    s.insert({std::min(i, j), std::max(i, j)});
  }
  return {s.begin(), s.end()};
}

/// Nearest-neighbour bonds of an lx * ly torus with row-major site x + lx*y.
inline std::vector<std::pair<int, int>> torus_bonds(int lx, int ly) {
  std::set<std::pair<int, int>> s;
  for (int y = 0; y < ly; ++y)
    for (int x = 0; x < lx; ++x) {
      const int a = x + lx * y;
      for (int b : {wrap(x + 1, lx) + lx * y, x + lx * wrap(y + 1, ly)})
        if (a != b) s.insert({std::min(a, b), std::max(a, b)});
    }
  return {s.begin(), s.end()};
}

inline Mat h0(int n) {
  Mat h = Mat::Zero(1 << n, 1 << n);
  for (int i = 0; i < n; ++i) h += product(n, {{i, 'z'}});
  return h;
}

/// sum_i V_i over geometric nn and nnn bonds.
inline Mat pair_perturbation(int l) {
  Mat v = Mat::Zero(1 << l, 1 << l);
  for (int d : {1, 2})
    for (auto [i, j] : chain_bonds(l, d)) v += product(l, {{i, '+'}, {j, '+'}}) + product(l, {{i, '-'}, {j, '-'}});
  return v;
}

inline Mat h1d(int l, double j) { return h0(l) + 4.0 * j * pair_perturbation(l); }

/// (g/4) sum (s+s+ - s-s-) over nn and nnn bonds, g = 4J.
inline Mat sw_generator(int l, double j) {
  Mat s = Mat::Zero(1 << l, 1 << l);
  for (int d : {1, 2})
    for (auto [a, b] : chain_bonds(l, d)) s += product(l, {{a, '+'}, {b, '+'}}) - product(l, {{a, '-'}, {b, '-'}});
  return j * s;
}

/// Effective Hamiltonian written term by term from its closed form: z_i times
/// flip-flops between every pair of the four neighbours i-2, i-1, i+1, i+2.
inline Mat h1dsw(int l, double j) {
  Mat h = (1.0 + 8.0 * j * j) * h0(l);
  for (int i = 0; i < l; ++i) {
    const int nb[4] = {wrap(i - 2, l), wrap(i - 1, l), wrap(i + 1, l), wrap(i + 2, l)};
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        h += 4.0 * j * j *
             (product(l, {{i, 'z'}, {nb[a], '+'}, {nb[b], '-'}}) + product(l, {{i, 'z'}, {nb[a], '-'}, {nb[b], '+'}}));
  }
  return h;
}

inline Mat h2dtfim(int lx, int ly, double j) {
  const int n = lx * ly;
  Mat h = h0(n);
  for (auto [a, b] : torus_bonds(lx, ly)) h += j * product(n, {{a, 'x'}, {b, 'x'}});
  return h;
}

inline Mat h2dpt(int lx, int ly, double j) {
  const int n = lx * ly;
  Mat h = h0(n);
  for (auto [a, b] : torus_bonds(lx, ly))
    h += j * (product(n, {{a, '+'}, {b, '-'}}) + product(n, {{a, '-'}, {b, '+'}}));
  return h;
}

inline Eigen::VectorXd spectrum(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace oracle
