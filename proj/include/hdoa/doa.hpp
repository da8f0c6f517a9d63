#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hdoa/array_signal.hpp"

namespace hdoa {

// Beamforming spectrum |a(theta)^H x|^2 / m^2 on a uniform grid over the
// field of view. The 1/m^2 normalization makes full-array and interpolated
// spectra directly comparable (a unit source at a grid angle peaks at 1).
struct Spectrum {
  Eigen::VectorXd grid_deg;
  Eigen::VectorXd power;
};

inline Spectrum beamform(const Snapshot& x, const ArrayConfig& config,
                         double grid_step_deg = 0.1) {
  if (!(grid_step_deg > 0.0)) throw std::invalid_argument("beamform: grid step must be > 0");
  if (x.values.size() != config.m) throw std::invalid_argument("beamform: length mismatch");
  const int count = static_cast<int>(std::floor(2.0 * kFovDeg / grid_step_deg + 0.5)) + 1;
  Spectrum s;
  s.grid_deg.resize(count);
  s.power.resize(count);
  const double inv_m2 = 1.0 / (static_cast<double>(config.m) * config.m);
  for (int g = 0; g < count; ++g) {
    const double theta = -kFovDeg + g * grid_step_deg;
    s.grid_deg[g] = theta;
    const std::complex<double> r = steering_vector(config, theta).dot(x.values);
    s.power[g] = std::norm(r) * inv_m2;
  }
  return s;
}

struct PeakList {
  std::vector<double> angles_deg;  // descending power
  bool used_fallback = false;      // fewer strict local maxima than requested
};

// The p largest strict local maxima (interior points exceeding both
// neighbors). If fewer exist, the remaining slots are filled with the global
// maximum and the result is flagged.
inline PeakList find_peaks(const Spectrum& s, int p) {
  if (p < 1) throw std::invalid_argument("find_peaks: p must be >= 1");
  const int n = static_cast<int>(s.power.size());
  if (n == 0) throw std::invalid_argument("find_peaks: empty spectrum");
  std::vector<int> maxima;
  for (int i = 1; i + 1 < n; ++i)
    if (s.power[i] > s.power[i - 1] && s.power[i] > s.power[i + 1]) maxima.push_back(i);
  std::sort(maxima.begin(), maxima.end(),
            [&](int a, int b) { return s.power[a] > s.power[b]; });

  PeakList out;
  for (int i = 0; i < p && i < static_cast<int>(maxima.size()); ++i)
    out.angles_deg.push_back(s.grid_deg[maxima[i]]);
  if (static_cast<int>(out.angles_deg.size()) < p) {
    int gmax = 0;
    for (int i = 1; i < n; ++i)
      if (s.power[i] > s.power[gmax]) gmax = i;
    while (static_cast<int>(out.angles_deg.size()) < p)
      out.angles_deg.push_back(s.grid_deg[gmax]);
    out.used_fallback = true;
  }
  return out;
}

struct DoaResult {
  std::vector<double> estimates_deg;       // as passed in
  std::vector<double> matched_errors_deg;  // |estimate - truth| under the best assignment
  double mse_deg2 = 0.0;
};

// Minimum-over-permutations assignment of estimates to truth angles; the MSE
// is the mean squared matched error in degrees^2.
inline DoaResult doa_error(const std::vector<double>& estimates,
                           const std::vector<double>& truth) {
  if (estimates.size() != truth.size())
    throw std::invalid_argument("doa_error: length mismatch");
  const int p = static_cast<int>(truth.size());
  std::vector<int> perm(p), best(p);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_sse = std::numeric_limits<double>::infinity();
  do {
    double sse = 0.0;
    for (int i = 0; i < p; ++i) {
      const double d = estimates[perm[i]] - truth[i];
      sse += d * d;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  DoaResult out;
  out.estimates_deg = estimates;
  out.matched_errors_deg.resize(p);
  for (int i = 0; i < p; ++i)
    out.matched_errors_deg[i] = std::abs(estimates[best[i]] - truth[i]);
  out.mse_deg2 = best_sse / p;
  return out;
}

}  // namespace hdoa
