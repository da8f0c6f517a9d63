#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdoa/checkpoint.hpp"
#include "hdoa/hankel.hpp"
#include "hdoa/net.hpp"
#include "hdoa/util.hpp"

namespace hdoa {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double lr0 = 1e-4;
  double lr_decay = 0.5;  // multiplier applied every 10 epochs
  double alpha = 0.01;    // consistency-loss weight
  std::uint64_t seed = 0;
  int k_phases = 8;

  void validate() const {
    if (epochs < 1 || batch_size < 1 || k_phases < 0)
      throw std::invalid_argument("TrainConfig: epochs, batch_size, k_phases out of range");
    if (!(lr0 > 0.0) || !(lr_decay > 0.0) || alpha < 0.0)
      throw std::invalid_argument("TrainConfig: lr0, lr_decay must be positive, alpha >= 0");
  }

  double lr_at_epoch(int epoch1) const {
    return lr0 * std::pow(lr_decay, (epoch1 - 1) / 10);
  }
};

// Gradients are shape-congruent with the parameters they correspond to.
using GradientSet = NetParams;

inline NetParams zeros_like(const NetParams& p) {
  NetParams z = p;
  for (PhaseParams& ph : z.phases) {
    for (int l = 0; l < 3; ++l) {
      ph.enc_w[l].setZero();
      ph.enc_b[l].setZero();
      ph.dec_w[l].setZero();
      ph.dec_b[l].setZero();
    }
    ph.beta = 0.0;
    ph.gamma = 0.0;
  }
  return z;
}

struct LossParts {
  double total = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
};

// loss1: squared l2 distance between the final estimate and the stacked
// label, averaged over samples and vector length. loss2: the per-phase
// autoencoder-consistency terms, additionally averaged over the K+1 phases.
inline LossParts loss_batch(const BatchTrace& trace, const Eigen::MatrixXd& labels,
                            double alpha) {
  const int batch = trace.batch();
  const int dim = static_cast<int>(trace.input.rows());
  const int n_phases = static_cast<int>(trace.phase.size());
  LossParts parts;
  parts.loss1 = (trace.final_estimate() - labels).squaredNorm() /
                (static_cast<double>(batch) * dim);
  double acc = 0.0;
  for (int k = 0; k < n_phases; ++k) {
    const Eigen::MatrixXd& ref = (k == 0) ? trace.loss2_ref0 : trace.phase[k - 1].xhat;
    acc += (trace.phase[k].xtilde - ref).squaredNorm();
  }
  parts.loss2 = acc / (static_cast<double>(batch) * n_phases * dim);
  parts.total = parts.loss1 + alpha * parts.loss2;
  return parts;
}

inline LossParts loss(const ForwardTrace& trace, const Snapshot& label, double alpha) {
  const int dim = static_cast<int>(trace.input.size());
  const int n_phases = static_cast<int>(trace.xhat.size());
  LossParts parts;
  parts.loss1 = (trace.final_estimate() - complex_to_stacked(label.values)).squaredNorm() / dim;
  double acc = 0.0;
  for (int k = 0; k < n_phases; ++k) {
    const Eigen::VectorXd& ref = (k == 0) ? trace.loss2_ref0 : trace.xhat[k - 1];
    acc += (trace.xtilde[k] - ref).squaredNorm();
  }
  parts.loss2 = acc / (static_cast<double>(n_phases) * dim);
  parts.total = parts.loss1 + alpha * parts.loss2;
  return parts;
}

namespace detail {

// Backpropagates through one 3-layer MLP, accumulating weight and bias
// gradients, and returns the cotangent of the input. ReLU'(0) = 0.
inline Eigen::MatrixXd mlp3_backward(const std::array<Eigen::MatrixXd, 3>& w,
                                     const Mlp3Trace& t, const Eigen::MatrixXd& dout,
                                     std::array<Eigen::MatrixXd, 3>& dw,
                                     std::array<Eigen::VectorXd, 3>& db) {
  const Eigen::MatrixXd h1 = t.a1.cwiseMax(0.0);
  const Eigen::MatrixXd h2 = t.a2.cwiseMax(0.0);
  dw[2].noalias() += dout * h2.transpose();
  db[2] += dout.rowwise().sum();
  Eigen::MatrixXd d2 = w[2].transpose() * dout;
  d2.array() *= (t.a2.array() > 0.0).cast<double>();
  dw[1].noalias() += d2 * h1.transpose();
  db[1] += d2.rowwise().sum();
  Eigen::MatrixXd d1 = w[1].transpose() * d2;
  d1.array() *= (t.a1.array() > 0.0).cast<double>();
  dw[0].noalias() += d1 * t.in.transpose();
  db[0] += d1.rowwise().sum();
  return w[0].transpose() * d1;
}

}  // namespace detail

// Exact reverse-mode gradients of the total loss with respect to every
// learnable tensor. The Hankel lift, the anti-diagonal averaging and the
// phi gather/scatter backpropagate as their linear adjoints.
inline GradientSet backward(const BatchTrace& trace, const Eigen::MatrixXd& labels,
                            const NetParams& params, const HankelIndexMap& map,
                            ResidualMode mode, double alpha) {
  const int batch = trace.batch();
  const int dim = 2 * map.m;
  const int k_phases = params.k_phases();
  const double coef1 = 2.0 / (static_cast<double>(batch) * dim);
  const double coef2 = 2.0 * alpha / (static_cast<double>(batch) * (k_phases + 1) * dim);

  GradientSet grads = zeros_like(params);
  Eigen::MatrixXd dxhat = coef1 * (trace.final_estimate() - labels);

  for (int k = k_phases; k >= 1; --k) {
    const PhaseTrace& ph = trace.phase[k];
    const PhaseParams& pp = params.phases[k];
    PhaseParams& g = grads.phases[k];
    const Eigen::MatrixXd& xprev = trace.phase[k - 1].xhat;

    const Eigen::MatrixXd diff = ph.xtilde - xprev;  // skip-connection and loss2 operand
    g.gamma += (dxhat.array() * diff.array()).sum();
    const Eigen::MatrixXd dxtilde = (1.0 + pp.gamma) * dxhat + coef2 * diff;
    Eigen::MatrixXd dxprev = -pp.gamma * dxhat - coef2 * diff;

    const Eigen::MatrixXd ddec = inverse_stacked_adjoint_batch(dxtilde, map);
    const Eigen::MatrixXd dembed = detail::mlp3_backward(pp.dec_w, ph.dec, ddec, g.dec_w, g.dec_b);
    const Eigen::MatrixXd denc_out = extract_observed_batch(dembed, map);
    const Eigen::MatrixXd dgather = detail::mlp3_backward(pp.enc_w, ph.enc, denc_out, g.enc_w, g.enc_b);
    const Eigen::MatrixXd dlift = embed_observed_batch(dgather, map);
    const Eigen::MatrixXd dupdate = lift_stacked_adjoint_batch(dlift, map);

    g.beta += (dupdate.array() * ph.res.array()).sum();
    // update = xprev + beta * res(xprev); in masked mode d res/d xprev = -mask.
    dxprev += dupdate;
    if (mode == ResidualMode::masked) {
      for (int idx : map.omega) {
        dxprev.row(idx - 1) -= pp.beta * dupdate.row(idx - 1);
        dxprev.row(map.m + idx - 1) -= pp.beta * dupdate.row(map.m + idx - 1);
      }
    } else {
      dxprev -= pp.beta * dupdate;
    }
    dxhat = std::move(dxprev);
  }

  // Initialization layer: xhat0 = beta0 * xtilde0; the k = 0 consistency
  // reference is input-derived and carries no parameter gradient.
  {
    const PhaseTrace& ph = trace.phase[0];
    const PhaseParams& pp = params.phases[0];
    PhaseParams& g = grads.phases[0];
    const Eigen::MatrixXd diff = ph.xtilde - trace.loss2_ref0;
    g.beta += (dxhat.array() * ph.xtilde.array()).sum();
    const Eigen::MatrixXd dxtilde = pp.beta * dxhat + coef2 * diff;
    const Eigen::MatrixXd ddec = inverse_stacked_adjoint_batch(dxtilde, map);
    const Eigen::MatrixXd dembed = detail::mlp3_backward(pp.dec_w, ph.dec, ddec, g.dec_w, g.dec_b);
    const Eigen::MatrixXd denc_out = extract_observed_batch(dembed, map);
    detail::mlp3_backward(pp.enc_w, ph.enc, denc_out, g.enc_w, g.enc_b);
  }
  return grads;
}

struct AdamState {
  NetParams m;
  NetParams v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam_state(const NetParams& params) {
  AdamState st;
  st.m = zeros_like(params);
  st.v = zeros_like(params);
  return st;
}

// Standard Adam update with bias correction, element-wise over every
// learnable tensor and scalar.
inline void adam_step(NetParams& params, const GradientSet& grads, AdamState& st, double lr) {
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = st.beta1 * m.array() + (1.0 - st.beta1) * g.array();
    v.array() = st.beta2 * v.array() + (1.0 - st.beta2) * g.array().square();
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + st.eps);
  };
  auto update_scalar = [&](double& p, double g, double& m, double& v) {
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g * g;
    p -= lr * (m / bc1) / (std::sqrt(v / bc2) + st.eps);
  };
  for (std::size_t k = 0; k < params.phases.size(); ++k) {
    PhaseParams& p = params.phases[k];
    const PhaseParams& g = grads.phases[k];
    PhaseParams& m = st.m.phases[k];
    PhaseParams& v = st.v.phases[k];
    for (int l = 0; l < 3; ++l) {
      update(p.enc_w[l], g.enc_w[l], m.enc_w[l], v.enc_w[l]);
      update(p.enc_b[l], g.enc_b[l], m.enc_b[l], v.enc_b[l]);
      update(p.dec_w[l], g.dec_w[l], m.dec_w[l], v.dec_w[l]);
      update(p.dec_b[l], g.dec_b[l], m.dec_b[l], v.dec_b[l]);
    }
    update_scalar(p.beta, g.beta, m.beta, v.beta);
    update_scalar(p.gamma, g.gamma, m.gamma, v.gamma);
  }
}

// Optimizer state sidecar written next to checkpoints so an interrupted run
// resumes bit-exactly. Layout: magic "IHTS", u32 version, u32 epoch, u64
// step, then the m and v tensor sets in checkpoint tensor order.
inline constexpr char kTrainStateMagic[4] = {'I', 'H', 'T', 'S'};

inline void save_train_state(const std::string& path, const AdamState& st, int epoch) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write train state " + path);
  os.write(kTrainStateMagic, 4);
  write_u32le(os, 1);
  write_u32le(os, static_cast<std::uint32_t>(epoch));
  write_u32le(os, static_cast<std::uint32_t>(st.step & 0xffffffffULL));
  write_u32le(os, static_cast<std::uint32_t>(st.step >> 32));
  for (const NetParams* t : {&st.m, &st.v}) {
    for (const PhaseParams& ph : t->phases) {
      for (int l = 0; l < 3; ++l) {
        detail::write_matrix(os, ph.enc_w[l]);
        detail::write_vector(os, ph.enc_b[l]);
      }
      for (int l = 0; l < 3; ++l) {
        detail::write_matrix(os, ph.dec_w[l]);
        detail::write_vector(os, ph.dec_b[l]);
      }
      write_f64le(os, ph.beta);
      write_f64le(os, ph.gamma);
    }
  }
}

inline int load_train_state(const std::string& path, AdamState& st) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open train state " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTrainStateMagic, 4) != 0)
    throw std::runtime_error("not a train-state file: " + path);
  if (read_u32le(is) != 1) throw std::runtime_error("unsupported train-state version");
  const int epoch = static_cast<int>(read_u32le(is));
  const std::uint64_t lo = read_u32le(is);
  const std::uint64_t hi = read_u32le(is);
  st.step = static_cast<long>(lo | (hi << 32));
  for (NetParams* t : {&st.m, &st.v}) {
    for (PhaseParams& ph : t->phases) {
      for (int l = 0; l < 3; ++l) {
        detail::read_matrix(is, ph.enc_w[l]);
        detail::read_vector(is, ph.enc_b[l]);
      }
      for (int l = 0; l < 3; ++l) {
        detail::read_matrix(is, ph.dec_w[l]);
        detail::read_vector(is, ph.dec_b[l]);
      }
      ph.beta = read_f64le(is);
      ph.gamma = read_f64le(is);
    }
  }
  return epoch;
}

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  NetParams params;
  std::vector<EpochStats> history;
};

// Mini-batch training with the per-epoch seeded shuffle, learning-rate decay
// every 10 epochs and a checkpoint per epoch when out_dir is given. A
// non-finite loss aborts with a diagnostic checkpoint.
inline TrainResult train(const std::vector<SamplePair>& data, const ArrayConfig& config,
                         const HankelIndexMap& map, const TrainConfig& cfg,
                         ResidualMode mode = ResidualMode::masked,
                         const std::string& out_dir = "", bool resume = false) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");

  const int n = static_cast<int>(data.size());
  const int dim = 2 * map.m;
  Eigen::MatrixXd inputs(dim, n), labels(dim, n);
  for (int i = 0; i < n; ++i) {
    inputs.col(i) = complex_to_stacked(data[i].input.values);
    labels.col(i) = complex_to_stacked(data[i].label.values);
  }

  NetParams params;
  AdamState adam;
  int start_epoch = 1;
  const std::string ckpt_path = out_dir.empty() ? "" : out_dir + "/checkpoint.ckpt";
  const std::string state_path = out_dir.empty() ? "" : out_dir + "/train_state.bin";
  if (resume) {
    if (ckpt_path.empty()) throw std::invalid_argument("train: resume requires out_dir");
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.params.k_phases() != cfg.k_phases)
      throw std::runtime_error("train: checkpoint K differs from config");
    params = std::move(ckpt.params);
    adam = make_adam_state(params);
    start_epoch = load_train_state(state_path, adam) + 1;
  } else {
    params = init_net_params(map, cfg.k_phases, cfg.seed);
    adam = make_adam_state(params);
  }

  TrainResult result;
  std::vector<int> order(n);
  for (int epoch = start_epoch; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = cfg.lr_at_epoch(epoch);

    std::iota(order.begin(), order.end(), 0);
    SplitMix64 shuffle_rng = SplitMix64::stream(cfg.seed, static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<int>(shuffle_rng.below(i + 1))]);

    double sum_total = 0.0, sum1 = 0.0, sum2 = 0.0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n - begin);
      Eigen::MatrixXd bx(dim, bs), by(dim, bs);
      for (int i = 0; i < bs; ++i) {
        bx.col(i) = inputs.col(order[begin + i]);
        by.col(i) = labels.col(order[begin + i]);
      }
      BatchTrace trace = forward_batch(std::move(bx), params, map, mode);
      const LossParts parts = loss_batch(trace, by, cfg.alpha);
      if (!std::isfinite(parts.total)) {
        if (!out_dir.empty())
          save_checkpoint(out_dir + "/diagnostic_nonfinite.ckpt", config, params, mode);
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      sum_total += parts.total * bs;
      sum1 += parts.loss1 * bs;
      sum2 += parts.loss2 * bs;
      const GradientSet grads = backward(trace, by, params, map, mode, cfg.alpha);
      adam_step(params, grads, adam, lr);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.loss_total = sum_total / n;
    stats.loss1 = sum1 / n;
    stats.loss2 = sum2 / n;
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(stats);

    if (!out_dir.empty()) {
      save_checkpoint(ckpt_path, config, params, mode);
      save_train_state(state_path, adam, epoch);
    }
  }
  result.params = std::move(params);
  return result;
}

}  // namespace hdoa
