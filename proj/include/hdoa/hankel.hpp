#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hdoa/array_signal.hpp"

namespace hdoa {

// Flattened real/imag-stacked Hankel matrix: the row-major flattening of the
// real-part Hankel matrix followed by that of the imaginary part, 2*n1*n2
// entries total. See docs/FORMATS.md for the exact conventions.
using HankelVector = Eigen::VectorXd;

// Index machinery for the Hankel lift of an m-vector observed through omega.
// All indices below are 0-based; omega keeps the 1-based element convention
// of ArrayConfig.
//
// Shape rule: n1 = n2 = (m+1)/2 for odd m, n1 = m/2 and n2 = n1 + 1 for even.
// An entry (i, j) is observed iff its anti-diagonal t = i + j corresponds to
// an observed array element (t + 1 in omega).
struct HankelIndexMap {
  int m = 0;
  int n1 = 0;
  int n2 = 0;
  std::vector<int> omega;                     // 1-based observed element indices
  std::vector<int> anti_diag_len;             // length m, |{(i,j): i+j = t}|
  std::vector<std::pair<int, int>> theta;     // observed (i, j), ascending row-major
  std::vector<int> theta_flat;                // i*n2 + j for each theta entry
  std::vector<int> theta_src;                 // source element t = i+j for each theta entry
  std::vector<int> phi;                       // 2|theta| positions in the stacked Hankel vector

  int hankel_size() const { return n1 * n2; }
  int observed_count() const { return static_cast<int>(theta.size()); }

  int flat(int i, int j) const { return i * n2 + j; }
};

inline HankelIndexMap build_index_map(const ArrayConfig& config) {
  config.validate();
  HankelIndexMap map;
  map.m = config.m;
  map.n1 = (config.m % 2 == 1) ? (config.m + 1) / 2 : config.m / 2;
  map.n2 = config.m + 1 - map.n1;
  map.omega = config.omega;

  map.anti_diag_len.resize(map.m);
  for (int t = 0; t < map.m; ++t)
    map.anti_diag_len[t] = std::min({t + 1, map.n1, map.n2, map.m - t});

  std::vector<char> observed(map.m, 0);
  for (int idx : config.omega) observed[idx - 1] = 1;

  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j)
      if (observed[i + j]) {
        map.theta.emplace_back(i, j);
        map.theta_flat.push_back(map.flat(i, j));
        map.theta_src.push_back(i + j);
      }

  map.phi.reserve(2 * map.theta_flat.size());
  for (int f : map.theta_flat) map.phi.push_back(f);
  for (int f : map.theta_flat) map.phi.push_back(map.hankel_size() + f);
  return map;
}

// H(x): out(i, j) = x[i + j], constant along anti-diagonals.
inline Eigen::MatrixXcd lift(const Eigen::VectorXcd& x, const HankelIndexMap& map) {
  if (x.size() != map.m) throw std::invalid_argument("lift: length mismatch");
  Eigen::MatrixXcd out(map.n1, map.n2);
  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j) out(i, j) = x[i + j];
  return out;
}

// H^+(X): anti-diagonal averaging, the Moore-Penrose inverse of the lift.
inline Eigen::VectorXcd inverse(const Eigen::MatrixXcd& X, const HankelIndexMap& map) {
  if (X.rows() != map.n1 || X.cols() != map.n2)
    throw std::invalid_argument("inverse: shape mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(map.m);
  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j) out[i + j] += X(i, j);
  for (int t = 0; t < map.m; ++t) out[t] /= static_cast<double>(map.anti_diag_len[t]);
  return out;
}

// [Re(x); Im(x)] of length 2m.
inline Eigen::VectorXd complex_to_stacked(const Eigen::VectorXcd& x) {
  Eigen::VectorXd out(2 * x.size());
  out.head(x.size()) = x.real();
  out.tail(x.size()) = x.imag();
  return out;
}

inline Eigen::VectorXcd stacked_to_complex(const Eigen::VectorXd& v) {
  if (v.size() % 2 != 0)
    throw std::invalid_argument("stacked_to_complex: odd-length input");
  const auto m = v.size() / 2;
  Eigen::VectorXcd out(m);
  out.real() = v.head(m);
  out.imag() = v.tail(m);
  return out;
}

// Batched stacked lift: columns are independent stacked signals (2m x B) and
// become stacked Hankel vectors (2*n1*n2 x B).
inline Eigen::MatrixXd lift_stacked_batch(const Eigen::MatrixXd& s, const HankelIndexMap& map) {
  if (s.rows() != 2 * map.m) throw std::invalid_argument("lift_stacked_batch: row mismatch");
  const int hs = map.hankel_size();
  Eigen::MatrixXd out(2 * hs, s.cols());
  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j) {
      const int f = map.flat(i, j);
      out.row(f) = s.row(i + j);
      out.row(hs + f) = s.row(map.m + i + j);
    }
  return out;
}

// Adjoint of lift_stacked_batch: sums Hankel-vector cotangents back onto the
// signal entries they were copied from.
inline Eigen::MatrixXd lift_stacked_adjoint_batch(const Eigen::MatrixXd& v,
                                                  const HankelIndexMap& map) {
  const int hs = map.hankel_size();
  if (v.rows() != 2 * hs) throw std::invalid_argument("lift_stacked_adjoint_batch: row mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * map.m, v.cols());
  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j) {
      const int f = map.flat(i, j);
      out.row(i + j) += v.row(f);
      out.row(map.m + i + j) += v.row(hs + f);
    }
  return out;
}

// Batched segment-wise anti-diagonal averaging (2*n1*n2 x B -> 2m x B).
inline Eigen::MatrixXd inverse_stacked_batch(const Eigen::MatrixXd& v, const HankelIndexMap& map) {
  const int hs = map.hankel_size();
  if (v.rows() != 2 * hs) throw std::invalid_argument("inverse_stacked_batch: row mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * map.m, v.cols());
  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j) {
      const int f = map.flat(i, j);
      out.row(i + j) += v.row(f);
      out.row(map.m + i + j) += v.row(hs + f);
    }
  for (int t = 0; t < map.m; ++t) {
    const double inv_len = 1.0 / static_cast<double>(map.anti_diag_len[t]);
    out.row(t) *= inv_len;
    out.row(map.m + t) *= inv_len;
  }
  return out;
}

// Adjoint of inverse_stacked_batch: spreads signal cotangents evenly across
// each anti-diagonal.
inline Eigen::MatrixXd inverse_stacked_adjoint_batch(const Eigen::MatrixXd& s,
                                                     const HankelIndexMap& map) {
  if (s.rows() != 2 * map.m)
    throw std::invalid_argument("inverse_stacked_adjoint_batch: row mismatch");
  const int hs = map.hankel_size();
  Eigen::MatrixXd out(2 * hs, s.cols());
  for (int i = 0; i < map.n1; ++i)
    for (int j = 0; j < map.n2; ++j) {
      const int f = map.flat(i, j);
      const double inv_len = 1.0 / static_cast<double>(map.anti_diag_len[i + j]);
      out.row(f) = s.row(i + j) * inv_len;
      out.row(hs + f) = s.row(map.m + i + j) * inv_len;
    }
  return out;
}

// Gather the observed positions phi (2|theta| x B).
inline Eigen::MatrixXd extract_observed_batch(const Eigen::MatrixXd& v,
                                              const HankelIndexMap& map) {
  if (v.rows() != 2 * map.hankel_size())
    throw std::invalid_argument("extract_observed: shape mismatch");
  Eigen::MatrixXd out(static_cast<int>(map.phi.size()), v.cols());
  for (std::size_t k = 0; k < map.phi.size(); ++k) out.row(k) = v.row(map.phi[k]);
  return out;
}

// Scatter back into a zero vector at phi; positions off phi are exactly zero.
inline Eigen::MatrixXd embed_observed_batch(const Eigen::MatrixXd& u, const HankelIndexMap& map) {
  if (u.rows() != static_cast<int>(map.phi.size()))
    throw std::invalid_argument("embed_observed: length mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * map.hankel_size(), u.cols());
  for (std::size_t k = 0; k < map.phi.size(); ++k) out.row(map.phi[k]) = u.row(k);
  return out;
}

inline Eigen::VectorXd stacked_lift(const Eigen::VectorXd& s, const HankelIndexMap& map) {
  return lift_stacked_batch(s, map).col(0);
}

inline Eigen::VectorXd stacked_inverse(const HankelVector& v, const HankelIndexMap& map) {
  return inverse_stacked_batch(v, map).col(0);
}

inline Eigen::VectorXd extract_observed(const HankelVector& v, const HankelIndexMap& map) {
  return extract_observed_batch(v, map).col(0);
}

inline HankelVector embed_observed(const Eigen::VectorXd& u, const HankelIndexMap& map) {
  return embed_observed_batch(u, map).col(0);
}

}  // namespace hdoa
