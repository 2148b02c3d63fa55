#include "zipfmem/memory/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace zipfmem::memory {

template <typename T>
FloatImage<T> to_float_image(const env::Observation& obs) {
  FloatImage<T> im;
  const int hw = im.height * im.width;
  im.data.resize(static_cast<std::size_t>(3 * hw));
  for (int i = 0; i < hw; ++i) {
    for (int c = 0; c < 3; ++c) im.data[c * hw + i] = static_cast<T>(obs.pixels[i * 3 + c]) / T(255);
  }
  return im;
}

void AugmentConfig::validate() const {
  if (!(sigma >= 0)) throw std::invalid_argument("augment: sigma must be >= 0");
  if (!(cutout_min_frac >= 0 && cutout_max_frac <= 1 && cutout_min_frac <= cutout_max_frac)) {
    throw std::invalid_argument("augment: need 0 <= cutout_min_frac <= cutout_max_frac <= 1");
  }
}

template <typename T>
FloatImage<T> gaussian_noise(const FloatImage<T>& im, double sigma, Rng& rng) {
  if (!(sigma >= 0)) throw std::invalid_argument("gaussian_noise: sigma must be >= 0");
  FloatImage<T> out = im;
  if (sigma == 0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.data) v = static_cast<T>(std::clamp(static_cast<double>(v) + sigma * noise(rng), 0.0, 1.0));
  return out;
}

CutoutRect sample_cutout(int height, int width, const AugmentConfig& config, Rng& rng) {
  config.validate();
  const double span = config.cutout_max_frac - config.cutout_min_frac;
  const double fh = config.cutout_min_frac + span * uniform01(rng);
  const double fw = config.cutout_min_frac + span * uniform01(rng);
  CutoutRect r;
  r.height = std::clamp(static_cast<int>(std::lround(fh * height)), 0, height);
  r.width = std::clamp(static_cast<int>(std::lround(fw * width)), 0, width);
  r.y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(height - r.height + 1)));
  r.x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(width - r.width + 1)));
  return r;
}

template <typename T>
FloatImage<T> random_cutout(const FloatImage<T>& im, const AugmentConfig& config, Rng& rng) {
  FloatImage<T> out = im;
  const auto r = sample_cutout(im.height, im.width, config, rng);
  for (int c = 0; c < im.channels; ++c) {
    for (int y = r.y; y < r.y + r.height; ++y) {
      for (int x = r.x; x < r.x + r.width; ++x) out.at(c, y, x) = T(0);
    }
  }
  return out;
}

template <typename T>
FloatImage<T> augment(const FloatImage<T>& im, const AugmentConfig& config, Rng& rng) {
  config.validate();
  return random_cutout(gaussian_noise(im, config.sigma, rng), config, rng);
}

#define ZIPFMEM_INSTANTIATE(T)                                                            \
  template FloatImage<T> to_float_image<T>(const env::Observation&);                      \
  template FloatImage<T> gaussian_noise<T>(const FloatImage<T>&, double, Rng&);           \
  template FloatImage<T> random_cutout<T>(const FloatImage<T>&, const AugmentConfig&, Rng&); \
  template FloatImage<T> augment<T>(const FloatImage<T>&, const AugmentConfig&, Rng&);
ZIPFMEM_INSTANTIATE(float)
ZIPFMEM_INSTANTIATE(double)
#undef ZIPFMEM_INSTANTIATE

}  // namespace zipfmem::memory
