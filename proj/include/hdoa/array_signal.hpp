#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hdoa/rng.hpp"

namespace hdoa {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kDegToRad = kPi / 180.0;

// Sentinel SNR meaning "add no noise".
inline constexpr double kNoNoiseDb = std::numeric_limits<double>::infinity();

// Uniform linear array of m elements at spacing d = spacing_ratio * lambda,
// observed through the sparse subarray with 1-based element indices `omega`.
struct ArrayConfig {
  int m = 0;
  double spacing_ratio = 0.5;
  std::vector<int> omega;  // strictly increasing, non-empty, subset of {1..m}

  void validate() const {
    if (m < 1) throw std::invalid_argument("ArrayConfig: m must be positive");
    if (!(spacing_ratio > 0.0))
      throw std::invalid_argument("ArrayConfig: spacing_ratio must be positive");
    if (omega.empty()) throw std::invalid_argument("ArrayConfig: omega is empty");
    for (std::size_t i = 0; i < omega.size(); ++i) {
      if (omega[i] < 1 || omega[i] > m)
        throw std::invalid_argument("ArrayConfig: omega index out of [1, m]");
      if (i > 0 && omega[i] <= omega[i - 1])
        throw std::invalid_argument("ArrayConfig: omega must be strictly increasing");
    }
  }

  bool observes(int index1) const {
    return std::binary_search(omega.begin(), omega.end(), index1);
  }

  // 0/1 vector of length m, one at observed elements.
  Eigen::ArrayXd mask() const {
    Eigen::ArrayXd w = Eigen::ArrayXd::Zero(m);
    for (int idx : omega) w[idx - 1] = 1.0;
    return w;
  }

  bool full() const { return static_cast<int>(omega.size()) == m; }
};

inline ArrayConfig make_ula(int m, double spacing_ratio = 0.5) {
  ArrayConfig c;
  c.m = m;
  c.spacing_ratio = spacing_ratio;
  c.omega.resize(m);
  for (int i = 0; i < m; ++i) c.omega[i] = i + 1;
  c.validate();
  return c;
}

// Seeded sparse subarray with `keep` elements out of m. Elements 1 and m are
// always kept so the aperture matches the full array; the interior indices
// {2..m-1} are Fisher-Yates shuffled on stream(seed, 0) and the first
// (m - keep) shuffled entries are dropped. Documented in docs/FORMATS.md.
inline ArrayConfig make_sla(int m, int keep, std::uint64_t seed,
                            double spacing_ratio = 0.5) {
  if (keep < 2 || keep > m)
    throw std::invalid_argument("make_sla: keep must be in [2, m]");
  std::vector<int> interior;
  for (int i = 2; i <= m - 1; ++i) interior.push_back(i);
  SplitMix64 rng = SplitMix64::stream(seed, 0);
  for (std::size_t i = interior.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(interior[i - 1], interior[j]);
  }
  const int drop = m - keep;
  ArrayConfig c;
  c.m = m;
  c.spacing_ratio = spacing_ratio;
  c.omega.assign(interior.begin() + drop, interior.end());
  c.omega.push_back(1);
  c.omega.push_back(m);
  std::sort(c.omega.begin(), c.omega.end());
  c.validate();
  return c;
}

// P far-field sources: angle (degrees, broadside convention), amplitude and
// phase of the complex gain s_k = amplitude * exp(j * phase).
struct SourceSet {
  std::vector<double> angles_deg;
  std::vector<double> amplitudes;
  std::vector<double> phases_rad;

  int count() const { return static_cast<int>(angles_deg.size()); }

  void validate() const {
    if (angles_deg.empty()) throw std::invalid_argument("SourceSet: P must be >= 1");
    if (amplitudes.size() != angles_deg.size() || phases_rad.size() != angles_deg.size())
      throw std::invalid_argument("SourceSet: field lengths differ");
  }

  std::complex<double> gain(int k) const {
    return std::polar(amplitudes[k], phases_rad[k]);
  }
};

enum class SnapshotKind { full_clean, full_noisy, masked, reconstructed };

// One time instant of array output. Masked snapshots are exactly zero at
// every element not in omega.
struct Snapshot {
  Eigen::VectorXcd values;
  SnapshotKind kind = SnapshotKind::full_clean;
};

inline Eigen::VectorXcd steering_vector(const ArrayConfig& config, double theta_deg) {
  if (!(theta_deg > -90.0 && theta_deg < 90.0))
    throw std::invalid_argument("steering_vector: theta must lie in (-90, 90) degrees");
  const double s = std::sin(theta_deg * kDegToRad);
  Eigen::VectorXcd a(config.m);
  for (int k = 0; k < config.m; ++k) {
    const double phase = 2.0 * kPi * config.spacing_ratio * k * s;
    a[k] = std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return a;
}

inline Snapshot synthesize(const ArrayConfig& config, const SourceSet& sources) {
  config.validate();
  sources.validate();
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(config.m);
  for (int k = 0; k < sources.count(); ++k)
    x += sources.gain(k) * steering_vector(config, sources.angles_deg[k]);
  return Snapshot{std::move(x), SnapshotKind::full_clean};
}

// Draws one complex circular Gaussian noise vector on `rng` and adds it with
// variance sigma^2 = P_sig / 10^(snr/10), P_sig the per-sample empirical
// signal power (1/m) * sum |x_i|^2. Element order: t = 0..m-1, each element
// one Box-Muller pair (re, im).
inline Snapshot add_noise_with(const Snapshot& x, double snr_db, SplitMix64& rng) {
  const double p_sig = x.values.squaredNorm() / static_cast<double>(x.values.size());
  if (p_sig == 0.0)
    throw std::invalid_argument("add_noise: SNR undefined for all-zero snapshot");
  if (std::isinf(snr_db)) return Snapshot{x.values, SnapshotKind::full_noisy};
  const double sigma2 = p_sig / std::pow(10.0, snr_db / 10.0);
  const double scale = std::sqrt(sigma2 / 2.0);
  Eigen::VectorXcd out = x.values;
  for (int t = 0; t < out.size(); ++t) {
    const auto [z0, z1] = rng.normal_pair();
    out[t] += std::complex<double>(scale * z0, scale * z1);
  }
  return Snapshot{std::move(out), SnapshotKind::full_noisy};
}

inline Snapshot add_noise(const Snapshot& x, double snr_db, std::uint64_t seed) {
  SplitMix64 rng = SplitMix64::stream(seed, 0);
  return add_noise_with(x, snr_db, rng);
}

inline Snapshot apply_mask(const Snapshot& x, const ArrayConfig& config) {
  if (x.values.size() != config.m)
    throw std::invalid_argument("apply_mask: snapshot length != config.m");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(config.m);
  for (int idx : config.omega) out[idx - 1] = x.values[idx - 1];
  return Snapshot{std::move(out), SnapshotKind::masked};
}

struct SamplePair {
  Snapshot label;  // clean full array response
  Snapshot input;  // noisy, then masked
  SourceSet sources;
  double snr_db = kNoNoiseDb;
};

struct DatasetParams {
  int count = 0;
  int p = 2;
  double snr_lo_db = 10.0;
  double snr_hi_db = 30.0;
  std::uint64_t seed = 0;
  double min_separation_deg = 0.0;  // 0 = no constraint
};

// Field of view and amplitude/phase ranges for random sources.
inline constexpr double kFovDeg = 60.0;
inline constexpr double kAmpLo = 0.5;
inline constexpr double kAmpHi = 1.0;

// Per-sample draw order (see docs/FORMATS.md): angles for all P sources
// (re-drawn as a whole tuple until the pairwise separation constraint holds),
// then amplitudes, then phases, then the SNR (skipped when both bounds are
// the no-noise sentinel), then m noise pairs.
inline SourceSet draw_sources(SplitMix64& rng, int p, double min_separation_deg) {
  SourceSet s;
  s.angles_deg.resize(p);
  s.amplitudes.resize(p);
  s.phases_rad.resize(p);
  for (;;) {
    for (int k = 0; k < p; ++k) s.angles_deg[k] = rng.uniform(-kFovDeg, kFovDeg);
    if (min_separation_deg <= 0.0) break;
    double min_sep = std::numeric_limits<double>::infinity();
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b)
        min_sep = std::min(min_sep, std::abs(s.angles_deg[a] - s.angles_deg[b]));
    if (p < 2 || min_sep >= min_separation_deg) break;
  }
  for (int k = 0; k < p; ++k) s.amplitudes[k] = rng.uniform(kAmpLo, kAmpHi);
  for (int k = 0; k < p; ++k) s.phases_rad[k] = rng.uniform(0.0, 2.0 * kPi);
  return s;
}

// Like SamplePair but also keeps the unmasked noisy snapshot (used by the
// spectrum comparisons).
struct SampleTriple {
  SourceSet sources;
  Snapshot label;
  Snapshot noisy;
  Snapshot masked;
  double snr_db = kNoNoiseDb;
};

inline SampleTriple generate_sample_triple(const ArrayConfig& config,
                                           const DatasetParams& params,
                                           std::uint64_t sample_index) {
  SplitMix64 rng = SplitMix64::stream(params.seed, sample_index);
  SampleTriple t;
  t.sources = draw_sources(rng, params.p, params.min_separation_deg);
  t.label = synthesize(config, t.sources);
  if (std::isinf(params.snr_lo_db) && std::isinf(params.snr_hi_db)) {
    t.snr_db = kNoNoiseDb;
    t.noisy = Snapshot{t.label.values, SnapshotKind::full_noisy};
  } else {
    t.snr_db = rng.uniform(params.snr_lo_db, params.snr_hi_db);
    t.noisy = add_noise_with(t.label, t.snr_db, rng);
  }
  t.masked = apply_mask(t.noisy, config);
  return t;
}

inline SamplePair generate_sample(const ArrayConfig& config, const DatasetParams& params,
                                  std::uint64_t sample_index) {
  SampleTriple t = generate_sample_triple(config, params, sample_index);
  return SamplePair{std::move(t.label), std::move(t.masked), std::move(t.sources), t.snr_db};
}

// Labels are noiseless; inputs are noisy-then-masked. Reproducible bit for
// bit from (seed, config) for any `threads` since sample i draws only from
// stream(seed, i).
inline std::vector<SamplePair> generate_dataset(const ArrayConfig& config,
                                                const DatasetParams& params,
                                                int threads = 1) {
  config.validate();
  if (params.count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  if (params.p < 1) throw std::invalid_argument("generate_dataset: p must be >= 1");
  const int n1 = (config.m % 2 == 1) ? (config.m + 1) / 2 : config.m / 2;
  if (params.p > n1)
    throw std::invalid_argument("generate_dataset: p exceeds min(n1, n2), low-rank premise broken");

  std::vector<SamplePair> out(params.count);
  parallel_for(params.count, threads, [&](int i) {
    out[i] = generate_sample(config, params, static_cast<std::uint64_t>(i));
  });
  return out;
}

}  // namespace hdoa
