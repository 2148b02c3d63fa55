#pragma once

#include <vector>

#include "zipfmem/rng.hpp"

namespace zipfmem::env {

struct ZipfParams {
  int n = 1;
  double e = 0.0;
};

// p(k) = (1/k^e) / sum_i 1/i^e for k = 1..n, returned 0-based.
std::vector<double> zipf_pmf(const ZipfParams& params);

struct TrialSpec {
  int map_id = 0;
  int object_id = 0;
  bool operator==(const TrialSpec&) const = default;
};

// Samples (map, target object) pairs with independent Zipfian marginals.
// Index 0 is the most frequent category in both.
class TrialSampler {
 public:
  TrialSampler(ZipfParams maps, ZipfParams objects);
  TrialSpec sample(Rng& rng) const;
  const std::vector<double>& map_pmf() const { return map_pmf_; }
  const std::vector<double>& object_pmf() const { return object_pmf_; }

 private:
  std::vector<double> map_pmf_, object_pmf_;
  std::vector<double> map_cdf_, object_cdf_;
};

TrialSpec sample_trial(Rng& rng, const ZipfParams& maps, const ZipfParams& objects);

}  // namespace zipfmem::env
