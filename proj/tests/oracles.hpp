#pragma once

// Reference computations written independently of the library code paths:
// explicit loops, LU inverses and Jacobi SVDs.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sslci/generators.hpp"

namespace oracle {

using sslci::DenseMatrix;
using sslci::DenseVector;

inline DenseMatrix naive_cov(const DenseMatrix& a, const DenseMatrix& b, bool center) {
  const Eigen::Index n = a.rows();
  std::vector<double> ma(a.cols(), 0.0), mb(b.cols(), 0.0);
  if (center) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index r = 0; r < n; ++r) ma[j] += a(r, j);
      ma[j] /= static_cast<double>(n);
    }
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      for (Eigen::Index r = 0; r < n; ++r) mb[j] += b(r, j);
      mb[j] /= static_cast<double>(n);
    }
  }
  DenseMatrix out(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) s += (a(r, i) - ma[i]) * (b(r, j) - mb[j]);
      out(i, j) = s / static_cast<double>(n);
    }
  return out;
}

inline DenseMatrix lu_inverse(const DenseMatrix& m) { return Eigen::FullPivLU<DenseMatrix>(m).inverse(); }

/// E[A | B] map from the precision of the (A, B) marginal: -P_AA^{-1} P_AB.
inline DenseMatrix conditional_map_by_precision(const DenseMatrix& s_aa, const DenseMatrix& s_ab,
                                                const DenseMatrix& s_bb) {
  const Eigen::Index a = s_aa.rows(), b = s_bb.rows();
  DenseMatrix j(a + b, a + b);
  j << s_aa, s_ab, s_ab.transpose(), s_bb;
  const DenseMatrix p = lu_inverse(j);
  return -lu_inverse(p.topLeftCorner(a, a)) * p.topRightCorner(a, b);
}

inline DenseVector jacobi_singular_values(const DenseMatrix& m) {
  return Eigen::JacobiSVD<DenseMatrix>(m).singularValues();
}

/// sqrt(p1) T sqrt(p2) built entry by entry.
inline DenseMatrix weighted_t(const sslci::DiscreteJoint& j) {
  std::vector<double> p1(j.n1, 0.0), p2(j.n2, 0.0);
  DenseMatrix p12 = DenseMatrix::Zero(j.n1, j.n2);
  for (std::size_t a = 0; a < j.n1; ++a)
    for (std::size_t b = 0; b < j.n2; ++b)
      for (std::size_t y = 0; y < j.ny; ++y) {
        p12(a, b) += j.at(a, b, y);
        p1[a] += j.at(a, b, y);
        p2[b] += j.at(a, b, y);
      }
  DenseMatrix out(j.n1, j.n2);
  for (std::size_t a = 0; a < j.n1; ++a)
    for (std::size_t b = 0; b < j.n2; ++b) out(a, b) = p12(a, b) / std::sqrt(p1[a] * p2[b]);
  return out;
}

/// E_{X1} sum_x2 ( p(x2|x1) - sum_y p(y|x1) p(x2|y) )^2 by explicit loops.
inline double eps_ci_universal_sq(const sslci::DiscreteJoint& j) {
  std::vector<double> p1(j.n1, 0.0), py(j.ny, 0.0);
  for (std::size_t a = 0; a < j.n1; ++a)
    for (std::size_t b = 0; b < j.n2; ++b)
      for (std::size_t y = 0; y < j.ny; ++y) {
        p1[a] += j.at(a, b, y);
        py[y] += j.at(a, b, y);
      }
  double total = 0.0;
  for (std::size_t a = 0; a < j.n1; ++a) {
    for (std::size_t b = 0; b < j.n2; ++b) {
      double direct = 0.0, via_y = 0.0;
      for (std::size_t y = 0; y < j.ny; ++y) direct += j.at(a, b, y) / p1[a];
      for (std::size_t y = 0; y < j.ny; ++y) {
        double p_ay = 0.0, p_by = 0.0;
        for (std::size_t bb = 0; bb < j.n2; ++bb) p_ay += j.at(a, bb, y);
        for (std::size_t aa = 0; aa < j.n1; ++aa) p_by += j.at(aa, b, y);
        via_y += (p_ay / p1[a]) * (p_by / py[y]);
      }
      total += p1[a] * (direct - via_y) * (direct - via_y);
    }
  }
  return total;
}

}  // namespace oracle
