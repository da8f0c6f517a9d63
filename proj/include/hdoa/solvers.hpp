#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdoa/hankel.hpp"
#include "hdoa/lowrank.hpp"

namespace hdoa {

// Residual used by the gradient update. In masked mode the residual is
// mask .* (x_s - x), the gradient of the data-fit 1/2 ||mask .* x - x_s||^2.
// Literal mode keeps the plain difference (x_s - x), which pulls unobserved
// entries toward zero; retained behind this flag for comparison runs.
enum class ResidualMode { masked, literal };

inline const char* to_string(ResidualMode mode) {
  return mode == ResidualMode::masked ? "masked" : "literal";
}

inline ResidualMode residual_mode_from_string(const std::string& s) {
  if (s == "masked") return ResidualMode::masked;
  if (s == "literal") return ResidualMode::literal;
  throw std::invalid_argument("unknown residual mode: " + s);
}

struct SolverConfig {
  int rank_r = 2;
  double step_beta = 1.0;
  int max_iters = 500;
  double rel_tol = 1e-8;
  ResidualMode residual_mode = ResidualMode::masked;
  bool fiht_structured = true;  // use the 2r x 2r core path inside FIHT

  void validate() const {
    if (rank_r < 1) throw std::invalid_argument("SolverConfig: rank_r must be >= 1");
    if (!(step_beta > 0.0)) throw std::invalid_argument("SolverConfig: step_beta must be > 0");
    if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("SolverConfig: rel_tol must be > 0");
  }
};

struct SolverTrace {
  std::vector<double> rel_residual;  // ||mask.*(x_i - x_s)|| / ||x_s|| per iteration
  std::vector<double> rel_change;    // ||x_i - x_{i-1}|| / ||x_{i-1}|| per iteration
  Snapshot reconstruction;
  int iterations_used = 0;
  bool converged = false;
};

namespace detail {

inline Eigen::VectorXcd residual(const Eigen::VectorXcd& x, const Eigen::VectorXcd& xs,
                                 const HankelIndexMap& map, ResidualMode mode) {
  if (mode == ResidualMode::literal) return xs - x;
  Eigen::VectorXcd masked = Eigen::VectorXcd::Zero(x.size());
  for (int idx : map.omega) masked[idx - 1] = xs[idx - 1] - x[idx - 1];
  return masked;
}

inline double observed_residual_norm(const Eigen::VectorXcd& x, const Eigen::VectorXcd& xs,
                                     const HankelIndexMap& map) {
  double acc = 0.0;
  for (int idx : map.omega) acc += std::norm(x[idx - 1] - xs[idx - 1]);
  return std::sqrt(acc);
}

}  // namespace detail

// One IHT update: H^+(T_r(H(x_i + beta * res))).
inline Eigen::VectorXcd iht_step(const Eigen::VectorXcd& x_i, const Snapshot& x_s,
                                 const SolverConfig& cfg, const HankelIndexMap& map) {
  const Eigen::VectorXcd res = detail::residual(x_i, x_s.values, map, cfg.residual_mode);
  const Eigen::MatrixXcd lifted = lift(x_i + cfg.step_beta * res, map);
  return inverse(project_fixed_rank(lifted, cfg.rank_r), map);
}

// One hard threshold of the lifted observation, H^+(T_r(H(x_s))).
inline Eigen::VectorXcd spectral_init(const Snapshot& x_s, const SolverConfig& cfg,
                                      const HankelIndexMap& map) {
  if (x_s.values.isZero(0.0)) return Eigen::VectorXcd::Zero(x_s.values.size());
  return inverse(project_fixed_rank(lift(x_s.values, map), cfg.rank_r), map);
}

namespace detail {

template <typename StepFn>
SolverTrace run_solver(const Snapshot& x_s, const SolverConfig& cfg, const HankelIndexMap& map,
                       StepFn step, Eigen::VectorXcd x0) {
  const double xs_norm = x_s.values.norm();
  SolverTrace trace;
  Eigen::VectorXcd x = std::move(x0);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXcd x_next = step(x);
    const double prev_norm = x.norm();
    const double change = (x_next - x).norm();
    const double rel_change = prev_norm > 0.0 ? change / prev_norm : change;
    const double rel_res =
        xs_norm > 0.0 ? observed_residual_norm(x_next, x_s.values, map) / xs_norm : 0.0;
    trace.rel_change.push_back(rel_change);
    trace.rel_residual.push_back(rel_res);
    x = x_next;
    trace.iterations_used = it + 1;
    if (rel_change < cfg.rel_tol) {
      trace.converged = true;
      break;
    }
  }
  trace.reconstruction = Snapshot{std::move(x), SnapshotKind::reconstructed};
  return trace;
}

}  // namespace detail

// IHT from the spectral initialization. Non-convergence is reported in the
// trace, not thrown.
inline SolverTrace iht_solve(const Snapshot& x_s, const SolverConfig& cfg,
                             const HankelIndexMap& map) {
  cfg.validate();
  if (x_s.values.size() != map.m) throw std::invalid_argument("iht_solve: length mismatch");
  auto step = [&](const Eigen::VectorXcd& x) { return iht_step(x, x_s, cfg, map); };
  return detail::run_solver(x_s, cfg, map, step, spectral_init(x_s, cfg, map));
}

// FIHT: the lifted update is projected onto the tangent space at the previous
// iterate's factorization before the rank-r truncation.
inline SolverTrace fiht_solve(const Snapshot& x_s, const SolverConfig& cfg,
                              const HankelIndexMap& map) {
  cfg.validate();
  if (x_s.values.size() != map.m) throw std::invalid_argument("fiht_solve: length mismatch");
  if (x_s.values.isZero(0.0)) {
    auto step = [&](const Eigen::VectorXcd& x) { return iht_step(x, x_s, cfg, map); };
    return detail::run_solver(x_s, cfg, map, step, Eigen::VectorXcd::Zero(map.m).eval());
  }
  RankFactorization basis = truncated_svd(lift(x_s.values, map), cfg.rank_r);
  auto step = [&](const Eigen::VectorXcd& x) {
    const Eigen::VectorXcd res = detail::residual(x, x_s.values, map, cfg.residual_mode);
    const Eigen::MatrixXcd lifted = lift(x + cfg.step_beta * res, map);
    basis = cfg.fiht_structured ? tangent_truncate(lifted, basis, cfg.rank_r)
                                : tangent_truncate_dense(lifted, basis, cfg.rank_r);
    return inverse(basis.reconstruct(), map);
  };
  return detail::run_solver(x_s, cfg, map, step, inverse(basis.reconstruct(), map));
}

}  // namespace hdoa
