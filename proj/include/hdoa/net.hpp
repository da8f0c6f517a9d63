#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hdoa/hankel.hpp"
#include "hdoa/rng.hpp"
#include "hdoa/solvers.hpp"

namespace hdoa {

// One phase of IHT-Net. The encoder is 3 linear layers of width 2|theta|,
// the decoder 3 linear layers of width 2*n1*n2, with ReLUs between layers
// (linear-relu-linear-relu-linear, no activation after the last layer).
// Phase 0 is the initialization layer: its beta slot stores beta_0 and gamma
// is unused; phases >= 1 use beta as the gradient step and gamma as the skip
// weight.
struct PhaseParams {
  std::array<Eigen::MatrixXd, 3> enc_w;
  std::array<Eigen::VectorXd, 3> enc_b;
  std::array<Eigen::MatrixXd, 3> dec_w;
  std::array<Eigen::VectorXd, 3> dec_b;
  double beta = 0.0;
  double gamma = 0.0;
};

struct NetParams {
  std::vector<PhaseParams> phases;  // K+1 entries, index 0 = initialization layer

  int k_phases() const { return static_cast<int>(phases.size()) - 1; }
  double beta0() const { return phases.front().beta; }
  double& beta0() { return phases.front().beta; }
};

// Identity weights plus uniform noise of scale 1e-2, zero biases, beta_0 = 1,
// beta_k = 0.5, gamma_k = 0. The near-identity start keeps the untrained
// network close to plain IHT iterations.
inline NetParams init_net_params(const HankelIndexMap& map, int k_phases, std::uint64_t seed) {
  if (k_phases < 0) throw std::invalid_argument("init_net_params: K must be >= 0");
  const int enc_dim = static_cast<int>(map.phi.size());
  const int dec_dim = 2 * map.hankel_size();
  SplitMix64 rng = SplitMix64::stream(seed, 0xA11CE);
  auto noisy_identity = [&](int n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) w(i, j) += rng.uniform(-1e-2, 1e-2);
    return w;
  };
  NetParams params;
  params.phases.resize(k_phases + 1);
  for (int k = 0; k <= k_phases; ++k) {
    PhaseParams& ph = params.phases[k];
    for (int l = 0; l < 3; ++l) {
      ph.enc_w[l] = noisy_identity(enc_dim);
      ph.enc_b[l] = Eigen::VectorXd::Zero(enc_dim);
      ph.dec_w[l] = noisy_identity(dec_dim);
      ph.dec_b[l] = Eigen::VectorXd::Zero(dec_dim);
    }
    ph.beta = (k == 0) ? 1.0 : 0.5;
    ph.gamma = 0.0;
  }
  return params;
}

// Forward intermediates of one 3-layer MLP, kept for the backward pass.
// ReLU outputs are recomputed from the pre-activations when needed.
struct Mlp3Trace {
  Eigen::MatrixXd in;   // layer-1 input
  Eigen::MatrixXd a1;   // pre-activation 1
  Eigen::MatrixXd a2;   // pre-activation 2
  Eigen::MatrixXd out;  // layer-3 output (no activation)
};

inline void mlp3_forward(const std::array<Eigen::MatrixXd, 3>& w,
                         const std::array<Eigen::VectorXd, 3>& b, Eigen::MatrixXd in,
                         Mlp3Trace& t) {
  t.in = std::move(in);
  t.a1.noalias() = w[0] * t.in;
  t.a1.colwise() += b[0];
  Eigen::MatrixXd h = t.a1.cwiseMax(0.0);
  t.a2.noalias() = w[1] * h;
  t.a2.colwise() += b[1];
  h = t.a2.cwiseMax(0.0);
  t.out.noalias() = w[2] * h;
  t.out.colwise() += b[2];
}

struct PhaseTrace {
  Eigen::MatrixXd res;     // gradient-module residual, phases >= 1 (2m x B)
  Mlp3Trace enc;           // enc.in = values gathered at phi
  Mlp3Trace dec;           // dec.in = encoder output embedded at phi
  Eigen::MatrixXd xtilde;  // H^+ of the decoder output (2m x B)
  Eigen::MatrixXd xhat;    // phase output (2m x B)
};

// Everything the loss and the backward pass need, for a whole batch at once
// (columns are samples).
struct BatchTrace {
  Eigen::MatrixXd input;      // masked stacked input (2m x B)
  Eigen::MatrixXd loss2_ref0; // re-averaged masked input, reference of the k=0 term
  std::vector<PhaseTrace> phase;  // K+1 entries

  const Eigen::MatrixXd& final_estimate() const { return phase.back().xhat; }
  int batch() const { return static_cast<int>(input.cols()); }
};

namespace detail {

// mask .* (input - x) on stacked vectors, or the plain difference.
inline Eigen::MatrixXd stacked_residual(const Eigen::MatrixXd& x, const Eigen::MatrixXd& input,
                                        const HankelIndexMap& map, ResidualMode mode) {
  if (mode == ResidualMode::literal) return input - x;
  Eigen::MatrixXd res = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int idx : map.omega) {
    res.row(idx - 1) = input.row(idx - 1) - x.row(idx - 1);
    res.row(map.m + idx - 1) = input.row(map.m + idx - 1) - x.row(map.m + idx - 1);
  }
  return res;
}

}  // namespace detail

inline BatchTrace forward_batch(Eigen::MatrixXd input, const NetParams& params,
                                const HankelIndexMap& map,
                                ResidualMode mode = ResidualMode::masked) {
  if (input.rows() != 2 * map.m) throw std::invalid_argument("forward_batch: row mismatch");
  const int k_phases = params.k_phases();
  BatchTrace trace;
  trace.input = std::move(input);
  trace.phase.resize(k_phases + 1);

  // Initialization layer.
  {
    PhaseTrace& ph = trace.phase[0];
    const Eigen::MatrixXd lifted = lift_stacked_batch(trace.input, map);
    Eigen::MatrixXd gathered = extract_observed_batch(lifted, map);
    trace.loss2_ref0 = inverse_stacked_batch(embed_observed_batch(gathered, map), map);
    mlp3_forward(params.phases[0].enc_w, params.phases[0].enc_b, std::move(gathered), ph.enc);
    mlp3_forward(params.phases[0].dec_w, params.phases[0].dec_b,
                 embed_observed_batch(ph.enc.out, map), ph.dec);
    ph.xtilde = inverse_stacked_batch(ph.dec.out, map);
    ph.xhat = params.beta0() * ph.xtilde;
  }

  for (int k = 1; k <= k_phases; ++k) {
    PhaseTrace& ph = trace.phase[k];
    const PhaseParams& pp = params.phases[k];
    const Eigen::MatrixXd& xprev = trace.phase[k - 1].xhat;
    ph.res = detail::stacked_residual(xprev, trace.input, map, mode);
    const Eigen::MatrixXd lifted = lift_stacked_batch(xprev + pp.beta * ph.res, map);
    mlp3_forward(pp.enc_w, pp.enc_b, extract_observed_batch(lifted, map), ph.enc);
    mlp3_forward(pp.dec_w, pp.dec_b, embed_observed_batch(ph.enc.out, map), ph.dec);
    ph.xtilde = inverse_stacked_batch(ph.dec.out, map);
    ph.xhat = ph.xtilde + pp.gamma * (ph.xtilde - xprev);
  }
  return trace;
}

// Single-sample trace exposed to the loss: the per-phase estimates and
// autoencoder outputs.
struct ForwardTrace {
  std::vector<Eigen::VectorXd> xhat;    // K+1 stacked estimates, last is x_hat_K
  std::vector<Eigen::VectorXd> xtilde;  // K+1 autoencoder outputs after H^+
  Eigen::VectorXd loss2_ref0;
  Eigen::VectorXd input;

  const Eigen::VectorXd& final_estimate() const { return xhat.back(); }
};

inline ForwardTrace to_forward_trace(const BatchTrace& bt, int col = 0) {
  ForwardTrace t;
  t.xhat.reserve(bt.phase.size());
  t.xtilde.reserve(bt.phase.size());
  for (const PhaseTrace& ph : bt.phase) {
    t.xhat.push_back(ph.xhat.col(col));
    t.xtilde.push_back(ph.xtilde.col(col));
  }
  t.loss2_ref0 = bt.loss2_ref0.col(col);
  t.input = bt.input.col(col);
  return t;
}

inline ForwardTrace forward(const Snapshot& x_s, const NetParams& params,
                            const HankelIndexMap& map,
                            ResidualMode mode = ResidualMode::masked) {
  return to_forward_trace(forward_batch(complex_to_stacked(x_s.values), params, map, mode));
}

// Initialization layer alone (Eq.-level entry point; also phase 0 of forward).
// Returns the stacked estimate x_hat_0, the pre-scaling H^+ output x_tilde_0,
// and the re-averaged masked input used as the k = 0 consistency reference.
struct InitLayerOut {
  Eigen::VectorXd xhat0;
  Eigen::VectorXd xtilde0;
  Eigen::VectorXd loss2_ref0;
};

inline InitLayerOut init_layer(const Eigen::VectorXd& x_s_stacked, const PhaseParams& p0,
                               const HankelIndexMap& map) {
  const Eigen::MatrixXd lifted = lift_stacked_batch(x_s_stacked, map);
  Eigen::MatrixXd gathered = extract_observed_batch(lifted, map);
  InitLayerOut out;
  out.loss2_ref0 = inverse_stacked_batch(embed_observed_batch(gathered, map), map).col(0);
  Mlp3Trace enc, dec;
  mlp3_forward(p0.enc_w, p0.enc_b, std::move(gathered), enc);
  mlp3_forward(p0.dec_w, p0.dec_b, embed_observed_batch(enc.out, map), dec);
  out.xtilde0 = inverse_stacked_batch(dec.out, map).col(0);
  out.xhat0 = p0.beta * out.xtilde0;
  return out;
}

// Gradient Descent Module: the stacked lift of x_hat + beta * res.
inline HankelVector gradient_module(const Eigen::VectorXd& xhat,
                                    const Eigen::VectorXd& x_s_stacked, double beta,
                                    const HankelIndexMap& map,
                                    ResidualMode mode = ResidualMode::masked) {
  const Eigen::MatrixXd res = detail::stacked_residual(xhat, x_s_stacked, map, mode);
  return stacked_lift(xhat + beta * res.col(0), map);
}

// Low-Rank Approximation Module: extract at phi, encode, embed, decode, map
// back through H^+, then apply the skip connection against the phase input.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> lowrank_module(
    const HankelVector& lifted_update, const Eigen::VectorXd& xprev, const PhaseParams& pp,
    const HankelIndexMap& map) {
  Mlp3Trace enc, dec;
  mlp3_forward(pp.enc_w, pp.enc_b, extract_observed_batch(lifted_update, map), enc);
  mlp3_forward(pp.dec_w, pp.dec_b, embed_observed_batch(enc.out, map), dec);
  Eigen::VectorXd xtilde = inverse_stacked_batch(dec.out, map).col(0);
  Eigen::VectorXd xnext = xtilde + pp.gamma * (xtilde - xprev);
  return {std::move(xnext), std::move(xtilde)};
}

}  // namespace hdoa
