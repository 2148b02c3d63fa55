#pragma once

#include <vector>

#include "zipfmem/env/environment.hpp"
#include "zipfmem/rng.hpp"

namespace zipfmem::memory {

// Channel-first float image with values in [0, 1].
template <typename T>
struct FloatImage {
  int channels = 3, height = env::kImageSize, width = env::kImageSize;
  std::vector<T> data;

  std::size_t size() const { return data.size(); }
  T& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  T at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  bool operator==(const FloatImage&) const = default;
};

// Bytes / 255, reordered HWC -> CHW.
template <typename T>
FloatImage<T> to_float_image(const env::Observation& obs);

struct AugmentConfig {
  double sigma = 0.05;
  double cutout_min_frac = 0.1;
  double cutout_max_frac = 0.3;

  void validate() const;
};

// im + sigma * n with n ~ N(0, sigma^2) elementwise, clamped to [0, 1]. The
// effective perturbation std is therefore sigma^2.
template <typename T>
FloatImage<T> gaussian_noise(const FloatImage<T>& im, double sigma, Rng& rng);

struct CutoutRect {
  int y = 0, x = 0, height = 0, width = 0;
};

// Draws the rectangle random_cutout would black out.
CutoutRect sample_cutout(int height, int width, const AugmentConfig& config, Rng& rng);

template <typename T>
FloatImage<T> random_cutout(const FloatImage<T>& im, const AugmentConfig& config, Rng& rng);

// Noise first, then cutout.
template <typename T>
FloatImage<T> augment(const FloatImage<T>& im, const AugmentConfig& config, Rng& rng);

}  // namespace zipfmem::memory
