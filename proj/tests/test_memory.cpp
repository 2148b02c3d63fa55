#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "zipfmem/errors.hpp"
#include "zipfmem/memory/augment.hpp"
#include "zipfmem/memory/episodic.hpp"
#include "zipfmem/memory/familiarity.hpp"
#include "zipfmem/nn/layers.hpp"
#include "zipfmem/nn/ops.hpp"

using namespace zipfmem;
using namespace zipfmem::memory;
using nn::Tensor;
using testing::gradcheck;
using testing::random_tensor;

namespace {

template <typename T>
FloatImage<T> small_image(int c, int h, int w, double value) {
  FloatImage<T> im;
  im.channels = c;
  im.height = h;
  im.width = w;
  im.data.assign(static_cast<std::size_t>(c * h * w), static_cast<T>(value));
  return im;
}

FloatImage<double> random_image(Rng& rng, int c = 3, int h = 6, int w = 6) {
  auto im = small_image<double>(c, h, w, 0);
  for (auto& v : im.data) v = uniform01(rng);
  return im;
}

// Flatten + affine; enough to exercise the contrastive plumbing.
class LinearEncoder : public Encoder<double> {
 public:
  LinearEncoder(std::size_t in, std::size_t out, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    W = nn::uniform_param<double>({out, in}, 0.5, rng);
    b = nn::uniform_param<double>({out}, 0.5, rng);
  }
  Tensor<double> encode(const Tensor<double>& images) const override {
    return nn::affine(nn::reshape(images, {images.dim(0), images.numel() / images.dim(0)}), W, b);
  }
  std::vector<Tensor<double>> encoder_parameters() const override { return {W, b}; }
  Tensor<double> W, b;
};

FamiliarityConfig small_config(std::size_t capacity) {
  FamiliarityConfig cfg;
  cfg.capacity = capacity;
  cfg.key_dim = 2;
  cfg.p_dim = 3;
  cfg.h_dim = 4;
  return cfg;
}

FamiliarityEntry<double> make_entry(std::uint64_t episode, std::uint64_t step, FloatImage<double> im) {
  FamiliarityEntry<double> e;
  e.id = {episode, step};
  e.im = std::move(im);
  e.k.assign(2, 0.1 * episode);
  e.p.assign(3, 0.2);
  e.h.assign(4, 0.3 * step);
  return e;
}

MemEntry<double> mem_entry(std::uint64_t id, Rng& rng, std::size_t p_dim, std::size_t h_dim, std::size_t key_dim) {
  MemEntry<double> e;
  e.id = {id, 0};
  for (std::size_t i = 0; i < p_dim; ++i) e.p.push_back(2 * uniform01(rng) - 1);
  for (std::size_t i = 0; i < h_dim; ++i) e.h.push_back(2 * uniform01(rng) - 1);
  for (std::size_t i = 0; i < key_dim; ++i) e.k.push_back(2 * uniform01(rng) - 1);
  return e;
}

std::vector<double> flat(const Tensor<double>& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

// ------------------------------------------------------------------ augment

TEST_CASE("gaussian noise") {
  Rng rng(1);
  auto im = small_image<double>(3, 84, 84, 0.5);
  CHECK(gaussian_noise(im, 0.0, rng) == im);

  SUBCASE("perturbation std is sigma squared") {
    auto big = small_image<double>(1, 1000, 1000, 0.5);
    auto noisy = gaussian_noise(big, 0.05, rng);
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      const double d = noisy.data[i] - 0.5;
      s += d;
      s2 += d * d;
    }
    const double n = static_cast<double>(noisy.size());
    const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(std::abs(sd - 0.0025) < 0.05 * 0.0025);
  }
  SUBCASE("clamped") {
    auto white = small_image<double>(3, 10, 10, 1.0);
    for (double v : gaussian_noise(white, 3.0, rng).data) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("random cutout") {
  Rng rng(2);
  auto im = small_image<double>(3, 84, 84, 0.7);
  AugmentConfig none{0.0, 0.0, 0.0}, all{0.0, 1.0, 1.0};
  CHECK(random_cutout(im, none, rng) == im);
  for (double v : random_cutout(im, all, rng).data) CHECK(v == 0.0);

  AugmentConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    Rng a(trial), b(trial);
    auto rect = sample_cutout(84, 84, cfg, a);
    CHECK(rect.y >= 0);
    CHECK(rect.x >= 0);
    CHECK(rect.y + rect.height <= 84);
    CHECK(rect.x + rect.width <= 84);
    CHECK(rect.height >= 8);
    CHECK(rect.height <= 26);
    auto out = random_cutout(im, cfg, b);
    int zeros = 0;
    for (double v : out.data) zeros += v == 0.0;
    CHECK(zeros == 3 * rect.height * rect.width);
  }
  CHECK_THROWS_AS(random_cutout(im, AugmentConfig{0.0, 0.5, 0.2}, rng), std::invalid_argument);
}

TEST_CASE("augment composes noise then cutout") {
  AugmentConfig cfg;
  Rng r0(5);
  auto im = random_image(r0, 3, 84, 84);
  CHECK(augment(im, AugmentConfig{0.0, 0.0, 0.0}, r0) == im);

  Rng a(9), b(9), c(9);
  auto out = augment(im, cfg, a);
  auto noisy = gaussian_noise(im, cfg.sigma, b);
  auto rect = sample_cutout(84, 84, cfg, b);
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < 84; ++y) {
      for (int x = 0; x < 84; ++x) {
        const bool inside = y >= rect.y && y < rect.y + rect.height && x >= rect.x && x < rect.x + rect.width;
        if (inside) CHECK(out.at(ch, y, x) == 0.0);
        else if (out.at(ch, y, x) != noisy.at(ch, y, x)) FAIL("non-cutout pixel differs from the noise output");
      }
    }
  }
  CHECK(augment(im, cfg, c) == out);
}

TEST_CASE("observation conversion") {
  env::Observation obs;
  obs.set(3, 5, {255, 51, 0});
  auto im = to_float_image<float>(obs);
  CHECK(im.at(0, 3, 5) == 1.0f);
  CHECK(im.at(1, 3, 5) == doctest::Approx(0.2f));
  CHECK(im.at(2, 3, 5) == 0.0f);
  CHECK(im.at(0, 0, 0) == 0.0f);
}

// -------------------------------------------------------------- familiarity

TEST_CASE("familiarity buffer is a FIFO that resets momentum on reuse") {
  FamiliarityBuffer<double> fm(small_config(4));
  Rng rng(3);
  for (std::uint64_t i = 0; i < 4; ++i) fm.add(make_entry(i, 0, random_image(rng)));
  CHECK(fm.full());
  fm.update_momentum({1, 2, 3, 4});
  fm.add(make_entry(9, 0, random_image(rng)));
  CHECK(fm.size() == 4);
  std::vector<std::uint64_t> live;
  for (const auto& e : fm.entries()) live.push_back(e.id.episode);
  CHECK(std::find(live.begin(), live.end(), 0) == live.end());
  CHECK(fm.entries()[0].id.episode == 9);
  CHECK(fm.entries()[0].passes_seen == 0);
  CHECK(fm.entries()[0].lm == 0.0);
  CHECK_FALSE(fm.all_scored());

  auto bad = make_entry(1, 1, random_image(rng));
  bad.p.push_back(0);
  CHECK_THROWS_AS(fm.add(bad), std::invalid_argument);
}

TEST_CASE("contrastive pass is gated on a full buffer") {
  FamiliarityBuffer<double> fm(small_config(8));
  Rng rng(4);
  LinearEncoder enc(3 * 6 * 6, 5, 1);
  for (std::uint64_t i = 0; i < 7; ++i) fm.add(make_entry(i, 0, random_image(rng)));
  auto res = fm.contrastive_pass(enc, rng);
  CHECK_FALSE(res.ran);
  CHECK(res.loss.item() == 0.0);
  CHECK(res.per_entry.empty());
}

TEST_CASE("identical embeddings give log(2N-1)") {
  for (std::size_t n : {4u, 16u, 64u}) {
    auto cfg = small_config(n);
    cfg.augment = {0.0, 0.0, 0.0};
    FamiliarityBuffer<double> fm(cfg);
    auto im = small_image<double>(3, 6, 6, 0.4);
    for (std::uint64_t i = 0; i < n; ++i) fm.add(make_entry(i, 0, im));
    LinearEncoder enc(3 * 6 * 6, 5, 2);
    Rng rng(5);
    auto res = fm.contrastive_pass(enc, rng);
    for (double l : res.per_entry) CHECK(std::abs(l - std::log(2.0 * n - 1)) < 1e-9);
    CHECK(std::abs(res.loss.item() - std::log(2.0 * n - 1)) < 1e-9);
  }
}

TEST_CASE("dominant positive similarity drives the loss to zero") {
  // two orthogonal directions, positives aligned with anchors
  Tensor<double> a({2, 2}, {1, 0, 0, 1}), p({2, 2}, {1, 0, 0, 1});
  auto loose = contrastive_losses(a, p, 1.0);
  auto tight = contrastive_losses(a, p, 0.01);
  CHECK(tight.at(0) < 1e-40);
  CHECK(loose.at(0) > tight.at(0));
}

TEST_CASE("per-entry losses are permutation-equivariant") {
  auto cfg = small_config(12);
  cfg.augment = {0.0, 0.0, 0.0};
  Rng rng(6);
  std::vector<FamiliarityEntry<double>> entries;
  for (std::uint64_t i = 0; i < 12; ++i) entries.push_back(make_entry(i, 0, random_image(rng)));
  LinearEncoder enc(3 * 6 * 6, 5, 3);
  FamiliarityBuffer<double> fwd(cfg), rev(cfg);
  fwd.add(entries);
  std::reverse(entries.begin(), entries.end());
  rev.add(entries);
  Rng r1(1), r2(2);
  auto a = fwd.contrastive_pass(enc, r1);
  auto b = rev.contrastive_pass(enc, r2);
  for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(a.per_entry[i] - b.per_entry[11 - i]) < 1e-12);
}

TEST_CASE("contrastive loss gradient matches the direct graph") {
  auto cfg = small_config(6);
  cfg.augment = {0.0, 0.0, 0.0};
  FamiliarityBuffer<double> fm(cfg);
  Rng rng(8);
  std::vector<double> pixels;
  for (std::uint64_t i = 0; i < 6; ++i) {
    auto im = random_image(rng);
    pixels.insert(pixels.end(), im.data.begin(), im.data.end());
    fm.add(make_entry(i, 0, im));
  }
  LinearEncoder enc(3 * 6 * 6, 5, 4);
  auto res = fm.contrastive_pass(enc, rng);
  nn::backward(nn::scale(res.loss, 2.0));
  const auto viaPass = flat(Tensor<double>(enc.W.shape(), {enc.W.grad().begin(), enc.W.grad().end()}));

  Tensor<double> images({6, 3, 6, 6}, pixels);
  auto direct = nn::mean(contrastive_losses(enc.encode(images), enc.encode(images), 0.5));
  CHECK(std::abs(direct.item() - res.loss.item()) < 1e-12);
  auto g = nn::gradient_of<double>(direct, enc.encoder_parameters());
  for (std::size_t i = 0; i < g[0].size(); ++i) CHECK(viaPass[i] == doctest::Approx(2 * g[0][i]).epsilon(1e-9));
}

TEST_CASE("minibatched pass covers every entry once") {
  auto cfg = small_config(10);
  cfg.minibatch = 4;
  FamiliarityBuffer<double> fm(cfg);
  Rng rng(9);
  for (std::uint64_t i = 0; i < 10; ++i) fm.add(make_entry(i, 0, random_image(rng)));
  LinearEncoder enc(3 * 6 * 6, 5, 5);
  auto res = fm.contrastive_pass(enc, rng);
  double mean = 0;
  for (double l : res.per_entry) {
    CHECK(l > 0.0);
    mean += l / 10;
  }
  CHECK(std::abs(mean - res.loss.item()) < 1e-12);
}

TEST_CASE("momentum EMA") {
  auto cfg = small_config(3);
  FamiliarityBuffer<double> fm(cfg);
  Rng rng(10);
  for (std::uint64_t i = 0; i < 3; ++i) fm.add(make_entry(i, 0, random_image(rng)));
  fm.update_momentum({2.0, 5.0, 7.0}, 0.97);
  fm.update_momentum({1.0, 5.0, 0.0}, 0.97);
  CHECK(std::abs(fm.entries()[0].lm - 1.97) < 1e-15);
  CHECK(fm.entries()[1].lm == doctest::Approx(5.0).epsilon(1e-15));
  fm.update_momentum({4.0, 4.0, 4.0}, 0.0);
  for (const auto& e : fm.entries()) CHECK(e.lm == 4.0);
  CHECK(fm.entries()[0].passes_seen == 3);
  CHECK_THROWS_AS(fm.update_momentum({1.0}, 0.9), std::invalid_argument);

  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    FamiliarityBuffer<double> one(small_config(1));
    one.add(make_entry(0, 0, random_image(rng)));
    const double c0 = u(gen), c = u(gen), beta = u(gen) / 10.01;
    const int T = 1 + trial;
    one.update_momentum({c0}, beta);
    for (int t = 1; t < T; ++t) one.update_momentum({c}, beta);
    CHECK(std::abs(one.entries()[0].lm - testing::ema_closed_form(c0, c, beta, T)) < 1e-10);
  }
}

TEST_CASE("normalized momentum") {
  FamiliarityBuffer<double> empty(small_config(3));
  CHECK_THROWS_AS(empty.normalized_momentum(), StateError);

  FamiliarityBuffer<double> fm(small_config(3));
  Rng rng(12);
  for (std::uint64_t i = 0; i < 3; ++i) fm.add(make_entry(i, 0, random_image(rng)));
  CHECK_THROWS_AS(fm.normalized_momentum(), StateError);
  fm.update_momentum({1, 2, 3});
  CHECK(fm.normalized_momentum() == std::vector<double>{0.0, 0.5, 1.0});
  fm.update_momentum({2, 2, 2}, 0.0);
  CHECK(fm.normalized_momentum() == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("rare-k equals a brute-force sort") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t cap = 5 + trial;
    FamiliarityBuffer<double> fm(small_config(cap));
    Rng rng(trial);
    const std::size_t n_add = cap + trial % 7;
    for (std::uint64_t i = 0; i < n_add; ++i) fm.add(make_entry(i, i % 3, random_image(rng, 1, 2, 2)));
    std::vector<double> losses(cap);
    // few distinct values so ties occur
    for (auto& l : losses) l = static_cast<double>(gen() % 4);
    fm.update_momentum(losses);
    const auto m = fm.normalized_momentum();
    std::vector<std::size_t> oracle(cap);
    std::iota(oracle.begin(), oracle.end(), 0);
    const auto& e = fm.entries();
    std::sort(oracle.begin(), oracle.end(), [&](std::size_t a, std::size_t b) {
      return std::make_tuple(-m[a], -static_cast<double>(e[a].seq), e[a].id) <
             std::make_tuple(-m[b], -static_cast<double>(e[b].seq), e[b].id);
    });
    for (std::size_t t_k : {std::size_t{1}, cap / 2, cap, cap + 3}) {
      auto got = fm.rare_indices(t_k);
      std::vector<std::size_t> want(oracle.begin(), oracle.begin() + std::min(t_k, cap));
      CHECK(got == want);
    }
  }
}

TEST_CASE("rare-k ties prefer the newer entry") {
  FamiliarityBuffer<double> fm(small_config(3));
  Rng rng(14);
  for (std::uint64_t i = 0; i < 3; ++i) fm.add(make_entry(i, 0, random_image(rng)));
  fm.update_momentum({3, 1, 3});
  auto rare = fm.get_rare_k(1);
  CHECK(rare[0].id.episode == 2);
  CHECK(fm.get_rare_k(3).size() == 3);
  std::ostringstream os;
  fm.write_momentum_csv(os, 7);
  CHECK(os.str().rfind("7,0,0,3,0.75\n", 0) == 0);
}

// ------------------------------------------------------------------ episodic

TEST_CASE("compute_key") {
  KeyProjection<double> proj{Tensor<double>({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor<double>({3}, {0, 0, 0}, true)};
  Tensor<double> p({1}, {2.0}), h({2}, {-1.0, 4.0});
  CHECK(flat(compute_key(p, h, proj)) == std::vector<double>{2.0, -1.0, 4.0});
  proj.b = Tensor<double>({3}, {0.5, 1.5, -2}, true);
  CHECK(flat(compute_key(Tensor<double>::zeros({1}), Tensor<double>::zeros({2}), proj)) ==
        std::vector<double>{0.5, 1.5, -2});
  auto k = compute_key(p, h, proj);
  nn::backward(nn::sum_squares(k));
  for (int i = 0; i < 3; ++i) CHECK(proj.b.grad()[i] == doctest::Approx(2 * k.at(i)));
  CHECK_THROWS_AS(compute_key(Tensor<double>::zeros({2}), h, proj), std::invalid_argument);
}

TEST_CASE("MEM insertion, dedup and eviction") {
  EpisodicMemory<double> mem({3, 2, 2, 2});
  Rng rng(15);
  auto e1 = mem_entry(1, rng, 2, 2, 2), e2 = mem_entry(2, rng, 2, 2, 2);
  mem.add_entries({});
  CHECK(mem.empty());
  mem.add_entries({e1, e2});
  auto e1b = mem_entry(1, rng, 2, 2, 2);
  mem.add_entries({e1b});
  CHECK(mem.size() == 2);
  CHECK(mem.entries().back().h == e1b.h);
  mem.add_entries({mem_entry(3, rng, 2, 2, 2), mem_entry(4, rng, 2, 2, 2)});
  CHECK(mem.size() == 3);
  CHECK(mem.entries().front().id.episode == 1);  // 2 was oldest and got evicted
}

TEST_CASE("retrieve examples") {
  std::mt19937_64 init(16);
  auto proj = make_key_projection<double>(2, 3, 2, init);
  EpisodicMemory<double> mem({8, 3, 2, 2});
  Tensor<double> q({2}, {0.3, -0.2});
  CHECK(flat(mem.retrieve(q, 4, 1e-3, proj)) == std::vector<double>{0, 0});
  CHECK_THROWS_AS(mem.retrieve(q, 4, 0.0, proj), std::invalid_argument);

  Rng rng(17);
  auto e = mem_entry(1, rng, 3, 2, 2);
  mem.add_entries({e});
  auto m = mem.retrieve(q, 1, 1e-3, proj);
  CHECK(std::abs(m.at(0) - e.h[0]) < 1e-12);
  CHECK(std::abs(m.at(1) - e.h[1]) < 1e-12);

  // second entry whose recomputed key equals the query exactly: weight 1/eps
  auto e2 = mem_entry(2, rng, 3, 2, 2);
  mem.add_entries({e2});
  auto exact = compute_key(Tensor<double>({3}, e2.p), Tensor<double>({2}, e2.h), proj);
  auto k1 = compute_key(Tensor<double>({3}, e.p), Tensor<double>({2}, e.h), proj);
  double d1 = 0;
  for (int i = 0; i < 2; ++i) d1 += (exact.at(i) - k1.at(i)) * (exact.at(i) - k1.at(i));
  const double w1 = 1 / (d1 + 1e-3), w2 = 1000.0;
  auto m2 = mem.retrieve(exact.detach(), 2, 1e-3, proj);
  for (int i = 0; i < 2; ++i) CHECK(m2.at(i) == doctest::Approx((w1 * e.h[i] + w2 * e2.h[i]) / (w1 + w2)).epsilon(1e-12));
}

TEST_CASE("retrieve matches the brute-force oracle and stays in the envelope") {
  std::mt19937_64 init(18);
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = std::vector<std::size_t>{1, 4, 16}[trial % 3];
    auto proj = make_key_projection<double>(4, 3, 5, init);
    for (auto& v : proj.b.mutable_data()) v = 2 * uniform01(rng) - 1;
    EpisodicMemory<double> mem({64, 3, 5, 4});
    const std::size_t n = 1 + uniform_index(rng, 40);
    std::vector<MemEntry<double>> es;
    for (std::size_t i = 0; i < n; ++i) es.push_back(mem_entry(i, rng, 3, 5, 4));
    mem.add_entries(es);
    std::vector<double> q(4);
    for (auto& v : q) v = 2 * uniform01(rng) - 1;
    auto oracle = testing::brute_force_retrieve(mem, q, K, 1e-3, flat(proj.W), flat(proj.b));
    CHECK(mem.nearest(q.data(), K) == oracle.selected);
    auto m = mem.retrieve(Tensor<double>({4}, q), K, 1e-3, proj);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(std::abs(m.at(i) - oracle.m[i]) <= 1e-12 * std::max(1.0, std::abs(oracle.m[i])));
      double lo = 1e9, hi = -1e9;
      for (auto s : oracle.selected) {
        lo = std::min(lo, mem.entries()[s].h[i]);
        hi = std::max(hi, mem.entries()[s].h[i]);
      }
      CHECK(m.at(i) >= lo - 1e-12);
      CHECK(m.at(i) <= hi + 1e-12);
    }
  }
}

TEST_CASE("batched retrieve equals per-row retrieve") {
  std::mt19937_64 init(20);
  Rng rng(21);
  auto proj = make_key_projection<double>(4, 3, 5, init);
  EpisodicMemory<double> mem({64, 3, 5, 4});
  std::vector<MemEntry<double>> es;
  for (std::size_t i = 0; i < 20; ++i) es.push_back(mem_entry(i, rng, 3, 5, 4));
  mem.add_entries(es);
  auto q = random_tensor({3, 4}, init, -1, 1, false);
  auto batched = mem.retrieve(q, 4, 1e-3, proj);
  for (std::size_t b = 0; b < 3; ++b) {
    auto row = mem.retrieve(nn::reshape(nn::slice_rows(q, b, 1), {4}), 4, 1e-3, proj);
    for (std::size_t i = 0; i < 5; ++i) CHECK(row.at(i) == doctest::Approx(batched.at(b * 5 + i)).epsilon(1e-14));
  }
}

TEST_CASE("retrieve gradients reach the query and the projection") {
  std::mt19937_64 init(22);
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    auto proj = make_key_projection<double>(3, 2, 4, init);
    for (auto& v : proj.b.mutable_data()) v = 2 * uniform01(rng) - 1;
    EpisodicMemory<double> mem({32, 2, 4, 3});
    std::vector<MemEntry<double>> es;
    for (std::size_t i = 0; i < 12; ++i) es.push_back(mem_entry(i, rng, 2, 4, 3));
    mem.add_entries(es);
    auto p = random_tensor({2, 2}, init);
    auto h = random_tensor({2, 4}, init);
    auto w = random_tensor({2, 4}, init, -1, 1, false);
    auto loss = [&] { return nn::dot(mem.retrieve(compute_key(p, h, proj), 4, 1e-1, proj), w); };
    CHECK(gradcheck(loss, {p, h, proj.W, proj.b}) < 1e-4);
  }
}

TEST_CASE("key refresh and dumps") {
  std::mt19937_64 init(24);
  Rng rng(25);
  auto proj = make_key_projection<double>(2, 3, 2, init);
  EpisodicMemory<double> mem({4, 3, 2, 2});
  auto e = mem_entry(5, rng, 3, 2, 2);
  e.momentum = 0.75;
  mem.add_entries({e});
  mem.refresh_keys(proj);
  auto k = compute_key(Tensor<double>({3}, e.p), Tensor<double>({2}, e.h), proj);
  CHECK(mem.entries()[0].k == flat(k));
  std::ostringstream os;
  mem.write_csv(os, 2);
  CHECK(os.str() == "2,5,0,0.75\n");
}
