// SPDX-License-Identifier: Apache-2.0
// Test-only finite-difference oracle. Independent of every backward pass.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tntc/nn.hpp"

namespace tntc::testing {

struct GradCheckResult {
  int checked = 0;
  double worst_rel = 0.0;
  std::string worst_name;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps gradients
/// that are zero in exact arithmetic (e.g. key biases under softmax shift
/// invariance) from turning rounding noise into a large ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Samples up to `samples` scalar entries across `params` and compares their
/// analytic gradient (already accumulated in Param::grad) with a central
/// difference of `loss` using step `h`.
inline GradCheckResult check_gradients(const std::vector<NamedParam>& params, const std::function<double()>& loss,
                                       int samples, std::uint64_t seed, double h = 1e-5) {
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].param->value.size(); ++i) pool.emplace_back(p, i);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  if (pool.size() > static_cast<std::size_t>(samples)) pool.resize(static_cast<std::size_t>(samples));

  GradCheckResult res;
  for (auto [p, i] : pool) {
    double& w = params[p].param->value[i];
    const double analytic = params[p].param->grad[i];
    const double saved = w;
    w = saved + h;
    const double up = loss();
    w = saved - h;
    const double down = loss();
    w = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = relative_error(analytic, numeric);
    ++res.checked;
    if (rel > res.worst_rel) {
      res.worst_rel = rel;
      res.worst_name = params[p].name;
      res.worst_index = i;
      res.worst_analytic = analytic;
      res.worst_numeric = numeric;
    }
  }
  return res;
}

inline Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.values()) v = d(rng);
  return t;
}

/// Σ out ⊙ weights: a scalar loss with a non-trivial upstream gradient.
inline double weighted_sum(const Tensor& out, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

}  // namespace tntc::testing
