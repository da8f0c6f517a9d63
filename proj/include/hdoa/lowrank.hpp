#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <stdexcept>

namespace hdoa {

// r dominant singular triplets: u (n1 x r), sigma (nonincreasing, >= 0),
// v (n2 x r), with u^H u = v^H v = I.
struct RankFactorization {
  Eigen::MatrixXcd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXcd v;

  int rank() const { return static_cast<int>(sigma.size()); }

  Eigen::MatrixXcd reconstruct() const {
    return u * sigma.asDiagonal() * v.adjoint();
  }
};

inline RankFactorization truncated_svd(const Eigen::MatrixXcd& x, int r) {
  const int kmax = static_cast<int>(std::min(x.rows(), x.cols()));
  if (r < 1 || r > kmax)
    throw std::invalid_argument("truncated_svd: rank out of [1, min(n1, n2)]");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("truncated_svd: Jacobi iteration did not converge");
  RankFactorization f;
  f.u = svd.matrixU().leftCols(r);
  f.sigma = svd.singularValues().head(r);
  f.v = svd.matrixV().leftCols(r);
  return f;
}

// Best rank-r approximation in Frobenius norm.
inline Eigen::MatrixXcd project_fixed_rank(const Eigen::MatrixXcd& x, int r) {
  return truncated_svd(x, r).reconstruct();
}

// Projection onto the tangent space of the fixed-rank manifold at the point
// with factors (u, v): P_T(X) = U U^H X + X V V^H - U U^H X V V^H.
inline Eigen::MatrixXcd tangent_project(const Eigen::MatrixXcd& x,
                                        const RankFactorization& basis) {
  if (x.rows() != basis.u.rows() || x.cols() != basis.v.rows())
    throw std::invalid_argument("tangent_project: shape mismatch");
  const Eigen::MatrixXcd ux = basis.u.adjoint() * x;  // r x n2
  const Eigen::MatrixXcd xv = x * basis.v;            // n1 x r
  return basis.u * ux + (xv - basis.u * (basis.u.adjoint() * xv)) * basis.v.adjoint();
}

// Reference path for T_r(P_T(X)).
inline RankFactorization tangent_truncate_dense(const Eigen::MatrixXcd& x,
                                                const RankFactorization& basis, int r) {
  return truncated_svd(tangent_project(x, basis), r);
}

// Structured path for T_r(P_T(X)): P_T(X) = [U Q1] K [V Q2]^H with a 2r x 2r
// core K, so only the core needs an SVD. Falls back to the dense path when
// 2r exceeds the matrix dimensions.
inline RankFactorization tangent_truncate(const Eigen::MatrixXcd& x,
                                          const RankFactorization& basis, int r) {
  const int n1 = static_cast<int>(basis.u.rows());
  const int n2 = static_cast<int>(basis.v.rows());
  const int rb = basis.rank();
  if (x.rows() != n1 || x.cols() != n2)
    throw std::invalid_argument("tangent_truncate: shape mismatch");
  if (2 * rb > std::min(n1, n2) || r > 2 * rb) return tangent_truncate_dense(x, basis, r);

  const Eigen::MatrixXcd m1 = basis.u.adjoint() * x;          // r x n2
  const Eigen::MatrixXcd m2 = x * basis.v;                    // n1 x r
  const Eigen::MatrixXcd c = m1 * basis.v;                    // r x r
  const Eigen::MatrixXcd r1 = m2 - basis.u * c;               // n1 x r, orthogonal to U
  const Eigen::MatrixXcd r2 = (m1 - c * basis.v.adjoint()).adjoint();  // n2 x r, orthogonal to V

  Eigen::HouseholderQR<Eigen::MatrixXcd> qr1(r1);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr2(r2);
  const Eigen::MatrixXcd q1 = qr1.householderQ() * Eigen::MatrixXcd::Identity(n1, rb);
  const Eigen::MatrixXcd q2 = qr2.householderQ() * Eigen::MatrixXcd::Identity(n2, rb);
  const Eigen::MatrixXcd s1 = q1.adjoint() * r1;  // r x r
  const Eigen::MatrixXcd s2 = q2.adjoint() * r2;  // r x r

  Eigen::MatrixXcd core = Eigen::MatrixXcd::Zero(2 * rb, 2 * rb);
  core.topLeftCorner(rb, rb) = c;
  core.topRightCorner(rb, rb) = s2.adjoint();
  core.bottomLeftCorner(rb, rb) = s1;

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("tangent_truncate: core SVD did not converge");

  Eigen::MatrixXcd left(n1, 2 * rb), right(n2, 2 * rb);
  left << basis.u, q1;
  right << basis.v, q2;

  RankFactorization f;
  f.u = left * svd.matrixU().leftCols(r);
  f.sigma = svd.singularValues().head(r);
  f.v = right * svd.matrixV().leftCols(r);
  return f;
}

}  // namespace hdoa
