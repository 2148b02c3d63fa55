#pragma once

// Central finite-difference oracle for the autodiff engine. Test-only; it never
// calls backward() on its own perturbed evaluations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "zipfmem/nn/tensor.hpp"

namespace zipfmem::testing {

using nn::Tensor;

// Relative error ||analytic - numeric|| / (||analytic|| + ||numeric||), taken
// per leaf; returns the worst leaf. Gradients that are zero up to finite-difference
// noise on both sides count as 0.
inline double gradcheck(const std::function<Tensor<double>()>& loss_fn, std::vector<Tensor<double>> leaves,
                        double eps = 1e-5) {
  const auto analytic = nn::gradient_of<double>(loss_fn(), leaves);
  double worst = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    auto values = leaves[k].mutable_data();
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss_fn().item();
      values[i] = saved - eps;
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    if (denom > 1e-8) worst = std::max(worst, std::sqrt(diff2) / denom);
  }
  return worst;
}

inline Tensor<double> random_tensor(nn::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                                    bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(nn::numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor<double>(std::move(shape), std::move(v), requires_grad);
}

}  // namespace zipfmem::testing
