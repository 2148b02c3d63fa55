#include "zipfmem/env/zipf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zipfmem::env {

namespace {

void validate(const ZipfParams& p) {
  if (p.n < 1) throw std::invalid_argument("zipf: n must be >= 1");
  if (!(p.e >= 0.0) || !std::isfinite(p.e)) throw std::invalid_argument("zipf: exponent must be finite and >= 0");
}

std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  double acc = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i] = (acc += pmf[i]);
  cdf.back() = 1.0;
  return cdf;
}

int draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng);
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

std::vector<double> zipf_pmf(const ZipfParams& params) {
  validate(params);
  std::vector<double> pmf(static_cast<std::size_t>(params.n));
  for (int k = 1; k <= params.n; ++k) pmf[k - 1] = 1.0 / std::pow(static_cast<double>(k), params.e);
  // summed smallest-first to keep the normalizer accurate for long tails
  double total = 0;
  for (auto it = pmf.rbegin(); it != pmf.rend(); ++it) total += *it;
  for (auto& p : pmf) p /= total;
  return pmf;
}

TrialSampler::TrialSampler(ZipfParams maps, ZipfParams objects)
    : map_pmf_(zipf_pmf(maps)),
      object_pmf_(zipf_pmf(objects)),
      map_cdf_(cumulative(map_pmf_)),
      object_cdf_(cumulative(object_pmf_)) {}

TrialSpec TrialSampler::sample(Rng& rng) const {
  TrialSpec t;
  t.map_id = draw(map_cdf_, rng);
  t.object_id = draw(object_cdf_, rng);
  return t;
}

TrialSpec sample_trial(Rng& rng, const ZipfParams& maps, const ZipfParams& objects) {
  return TrialSampler(maps, objects).sample(rng);
}

}  // namespace zipfmem::env
