#pragma once

// Independent reference implementations used by unit and acceptance tests.
// They deliberately avoid the library's ops: plain loops over std::vector.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "zipfmem/memory/episodic.hpp"

namespace zipfmem::testing {

struct RetrieveOracle {
  std::vector<std::size_t> selected;  // indices into the memory, nearest first
  std::vector<double> m;
};

// Full sort of all stored keys by distance (ties by id), then the weighted sum
// with keys recomputed from W and b written out term by term.
template <typename T>
RetrieveOracle brute_force_retrieve(const memory::EpisodicMemory<T>& mem, const std::vector<T>& query, std::size_t K,
                                    double eps, const std::vector<T>& W, const std::vector<T>& b) {
  RetrieveOracle out;
  const auto& entries = mem.entries();
  const std::size_t key_dim = query.size(), h_dim = mem.config().h_dim;
  if (entries.empty()) {
    out.m.assign(h_dim, 0.0);
    return out;
  }
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < key_dim; ++j) s += double(query[j] - entries[i].k[j]) * double(query[j] - entries[i].k[j]);
    d.push_back({s, i});
  }
  std::sort(d.begin(), d.end(), [&](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return entries[x.second].id < entries[y.second].id;
  });
  const std::size_t take = std::min(K, entries.size());
  out.m.assign(h_dim, 0.0);
  double wsum = 0;
  for (std::size_t n = 0; n < take; ++n) {
    const auto& e = entries[d[n].second];
    out.selected.push_back(d[n].second);
    std::vector<double> concat(e.p.begin(), e.p.end());
    concat.insert(concat.end(), e.h.begin(), e.h.end());
    double dist2 = 0;
    for (std::size_t r = 0; r < key_dim; ++r) {
      double key = b[r];
      for (std::size_t c = 0; c < concat.size(); ++c) key += double(W[r * concat.size() + c]) * concat[c];
      dist2 += (query[r] - key) * (query[r] - key);
    }
    const double w = 1.0 / (dist2 + eps);
    wsum += w;
    for (std::size_t q = 0; q < h_dim; ++q) out.m[q] += w * e.h[q];
  }
  for (auto& v : out.m) v /= wsum;
  return out;
}

// EMA closed form after a first loss c0 followed by T-1 losses equal to c.
inline double ema_closed_form(double c0, double c, double beta, int T) {
  const double decay = std::pow(beta, T - 1);
  return decay * c0 + (1 - decay) * c;
}

}  // namespace zipfmem::testing
