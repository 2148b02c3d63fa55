#include "zipfmem/agent/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "zipfmem/errors.hpp"
#include "zipfmem/nn/checkpoint.hpp"
#include "zipfmem/nn/ops.hpp"

namespace zipfmem::agent {

namespace {

constexpr std::size_t kWindow = 100;

template <typename U>
std::vector<U> row_of(const nn::Tensor<U>& t, std::size_t row) {
  const std::size_t w = t.numel() / t.dim(0);
  return {t.data().begin() + static_cast<std::ptrdiff_t>(row * w), t.data().begin() + static_cast<std::ptrdiff_t>((row + 1) * w)};
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(Rng& rng, const std::string& text) {
  std::istringstream is(text);
  is >> rng;
  if (!is) throw std::runtime_error("checkpoint: corrupt rng state");
}

std::string join_ids(const std::vector<memory::EntryId>& ids) {
  std::ostringstream os;
  for (const auto& id : ids) os << id.episode << ':' << id.step << ' ';
  return os.str();
}

std::vector<memory::EntryId> split_ids(const std::string& text) {
  std::vector<memory::EntryId> ids;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw std::runtime_error("checkpoint: corrupt entry id '" + tok + "'");
    ids.push_back({std::stoull(tok.substr(0, colon)), std::stoull(tok.substr(colon + 1))});
  }
  return ids;
}

template <typename U>
std::string join_numbers(const std::vector<U>& values) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& v : values) os << v << ' ';
  return os.str();
}

template <typename U>
std::vector<U> split_numbers(const std::string& text) {
  std::vector<U> out;
  std::istringstream is(text);
  U v;
  while (is >> v) out.push_back(v);
  return out;
}

void put_rows(nn::Archive<Real>& ar, const std::string& name, std::size_t rows, std::size_t width,
              const std::vector<Real>& flat) {
  if (rows > 0) ar.put(name, {rows, width}, flat);
}

void save_mem(nn::Archive<Real>& ar, const memory::EpisodicMemory<Real>& mem) {
  const auto& cfg = mem.config();
  std::vector<Real> p, h, k;
  std::vector<double> momentum;
  std::vector<memory::EntryId> ids;
  for (const auto& e : mem.entries()) {
    p.insert(p.end(), e.p.begin(), e.p.end());
    h.insert(h.end(), e.h.begin(), e.h.end());
    k.insert(k.end(), e.k.begin(), e.k.end());
    momentum.push_back(e.momentum);
    ids.push_back(e.id);
  }
  ar.meta["mem/size"] = std::to_string(mem.size());
  ar.meta["mem/ids"] = join_ids(ids);
  ar.meta["mem/momentum"] = join_numbers(momentum);
  put_rows(ar, "mem/p", mem.size(), cfg.p_dim, p);
  put_rows(ar, "mem/h", mem.size(), cfg.h_dim, h);
  put_rows(ar, "mem/k", mem.size(), cfg.key_dim, k);
}

void load_mem(const nn::Archive<Real>& ar, memory::EpisodicMemory<Real>& mem) {
  const auto n = static_cast<std::size_t>(std::stoull(ar.meta_value("mem/size")));
  const auto ids = split_ids(ar.meta_value("mem/ids"));
  const auto momentum = split_numbers<double>(ar.meta_value("mem/momentum"));
  if (ids.size() != n || momentum.size() != n) throw std::runtime_error("checkpoint: MEM metadata inconsistent");
  std::deque<memory::MemEntry<Real>> entries;
  const auto& cfg = mem.config();
  for (std::size_t i = 0; i < n; ++i) {
    memory::MemEntry<Real> e;
    e.id = ids[i];
    e.momentum = momentum[i];
    auto slice = [&](const char* name, std::size_t w) {
      const auto& v = ar.get(name).values;
      if (v.size() != n * w) throw std::runtime_error(std::string("checkpoint: ") + name + " has the wrong size");
      return std::vector<Real>(v.begin() + static_cast<std::ptrdiff_t>(i * w), v.begin() + static_cast<std::ptrdiff_t>((i + 1) * w));
    };
    e.p = slice("mem/p", cfg.p_dim);
    e.h = slice("mem/h", cfg.h_dim);
    e.k = slice("mem/k", cfg.key_dim);
    entries.push_back(std::move(e));
  }
  mem.restore(std::move(entries));
}

void load_params(const nn::Archive<Real>& ar, const nn::NamedTensors<Real>& params) {
  for (auto [name, tensor] : params) ar.load_into("param/" + name, tensor);
}

}  // namespace

std::string format_metrics(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%llu,%.6f,%.6f,%.6g,%.6g,%zu,%zu", r.learner_step,
                static_cast<unsigned long long>(r.env_steps), r.mean_episode_return, r.zipfian_accuracy_estimate,
                r.l_impala, r.l_contrastive, r.mem_size, r.transfer_count);
  return buf;
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      maps_((config_.validate(), env::generate_maps(config_.map_seed, config_.n_maps, config_.n_objects,
                                                    config_.map_config()))),
      sampler_(config_.map_zipf(), config_.object_zipf()),
      trial_rng_(mix_seed(config_.seed, 2)),
      action_rng_(mix_seed(config_.seed, 3)),
      contrastive_rng_(mix_seed(config_.seed, 4)),
      transfer_rng_(mix_seed(config_.seed, 5)) {
  agent_ = std::make_unique<AgentNet<Real>>(config_.arch(), mix_seed(config_.seed, 1));
  optimizer_ = std::make_unique<nn::RmsProp<Real>>(
      agent_->named_parameters(), nn::RmsPropConfig{config_.learning_rate, config_.rmsprop_decay, config_.rmsprop_eps});
  mem_ = std::make_unique<memory::EpisodicMemory<Real>>(config_.mem_config());
  if (uses_mem()) fm_ = std::make_unique<memory::FamiliarityBuffer<Real>>(config_.familiarity_config());
  actors_.resize(config_.n_actors);
  for (auto& a : actors_) {
    a.env = env::make_environment(config_.env_config());
    start_episode(a);
  }
}

void Trainer::start_episode(Actor& actor) {
  const auto trial = sampler_.sample(trial_rng_);
  actor.image = memory::to_float_image<Real>(actor.env->reset(maps_[trial.map_id], trial.object_id));
  actor.h.assign(config_.lstm_dim, Real(0));
  actor.c.assign(config_.lstm_dim, Real(0));
  actor.prev_action = -1;
  actor.prev_reward = 0;
  actor.episode = next_episode_++;
  actor.episode_step = 0;
  actor.episode_return = 0;
}

void Trainer::step() {
  const std::size_t S = config_.unroll_length, B = actors_.size(), H = config_.lstm_dim;
  const std::size_t img = actors_.front().image.size();
  const auto retrieval = config_.retrieval();
  const memory::EpisodicMemory<Real>* mem = uses_mem() ? mem_.get() : nullptr;
  diag_ = {};

  std::vector<Real> images(S * B * img), prev_rewards(S * B);
  std::vector<int> prev_actions(S * B), actions(S * B);
  std::vector<double> rewards(S * B), behavior(S * B);
  std::vector<std::uint8_t> dones(S * B), resets(S * B);
  std::vector<Real> h0(B * H), c0(B * H);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy(actors_[b].h.begin(), actors_[b].h.end(), h0.begin() + static_cast<std::ptrdiff_t>(b * H));
    std::copy(actors_[b].c.begin(), actors_[b].c.end(), c0.begin() + static_cast<std::ptrdiff_t>(b * H));
  }
  std::set<std::size_t> keep;
  for (auto i : subsample_trajectory(S, config_.hop)) keep.insert(i - 1);
  std::vector<memory::FamiliarityEntry<Real>> fresh;

  auto gather = [&](std::vector<Real>& imgs, std::vector<int>& pa, std::vector<Real>& pr, std::vector<Real>& hs,
                    std::vector<Real>& cs) {
    imgs.clear();
    pa.clear();
    pr.clear();
    hs.clear();
    cs.clear();
    for (const auto& a : actors_) {
      imgs.insert(imgs.end(), a.image.data.begin(), a.image.data.end());
      pa.push_back(a.prev_action);
      pr.push_back(a.prev_reward);
      hs.insert(hs.end(), a.h.begin(), a.h.end());
      cs.insert(cs.end(), a.c.begin(), a.c.end());
    }
  };
  const nn::Shape batch_shape{B, 3, static_cast<std::size_t>(env::kImageSize), static_cast<std::size_t>(env::kImageSize)};
  std::vector<Real> imgs, pr, hs, cs;
  std::vector<int> pa;

  for (std::size_t t = 0; t < S; ++t) {
    gather(imgs, pa, pr, hs, cs);
    std::copy(imgs.begin(), imgs.end(), images.begin() + static_cast<std::ptrdiff_t>(t * B * img));
    auto out = act<Real>(*agent_, nn::Tensor<Real>(batch_shape, imgs), pa, pr, nn::Tensor<Real>({B, H}, hs),
                   nn::Tensor<Real>({B, H}, cs), mem, retrieval, &action_rng_);
    for (std::size_t b = 0; b < B; ++b) {
      auto& actor = actors_[b];
      const std::size_t i = t * B + b;
      prev_actions[i] = actor.prev_action;
      prev_rewards[i] = actor.prev_reward;
      resets[i] = actor.episode_step == 0;
      actions[i] = out.action[b];
      behavior[i] = out.log_prob[b];
      auto result = actor.env->step(out.action[b]);
      rewards[i] = result.reward;
      dones[i] = result.done;
      actor.h = row_of(out.net.h, b);
      actor.c = row_of(out.net.c, b);
      if (fm_ && keep.count(t)) {
        memory::FamiliarityEntry<Real> e;
        e.id = {actor.episode, actor.episode_step};
        e.im = actor.image;
        e.k = row_of(out.net.k, b);
        e.p = row_of(out.p, b);
        e.h = actor.h;
        fresh.push_back(std::move(e));
      }
      actor.episode_return += result.reward;
      ++actor.episode_step;
      if (result.done) {
        recent_returns_.push_back(actor.episode_return);
        recent_success_.push_back(actor.env->status() == env::TrialStatus::success);
        if (recent_returns_.size() > kWindow) recent_returns_.pop_front();
        if (recent_success_.size() > kWindow) recent_success_.pop_front();
        ++diag_.episodes_finished;
        start_episode(actor);
      } else {
        actor.image = memory::to_float_image<Real>(result.observation);
        actor.prev_action = out.action[b];
        actor.prev_reward = static_cast<Real>(result.reward);
      }
    }
  }
  RlBatch<Real> batch;
  batch.steps = S;
  batch.actors = B;
  {
    gather(imgs, pa, pr, hs, cs);
    auto boot = act<Real>(*agent_, nn::Tensor<Real>(batch_shape, imgs), pa, pr, nn::Tensor<Real>({B, H}, hs),
                    nn::Tensor<Real>({B, H}, cs), mem, retrieval, nullptr);
    batch.bootstrap.assign(boot.value.begin(), boot.value.end());
  }

  // learner forward with gradients, time-major
  const nn::Tensor<Real> all_images({S * B, 3, static_cast<std::size_t>(env::kImageSize), static_cast<std::size_t>(env::kImageSize)},
                                    std::move(images));
  const auto P = agent_->encode(all_images);
  nn::Tensor<Real> h({B, H}, h0), c({B, H}, c0);
  std::vector<nn::Tensor<Real>> logits_parts, value_parts;
  for (std::size_t t = 0; t < S; ++t) {
    if (t > 0) {
      std::vector<Real> mask(B * H, Real(1));
      bool any = false;
      for (std::size_t b = 0; b < B; ++b) {
        if (resets[t * B + b]) {
          std::fill(mask.begin() + static_cast<std::ptrdiff_t>(b * H), mask.begin() + static_cast<std::ptrdiff_t>((b + 1) * H), Real(0));
          any = true;
        }
      }
      if (any) {
        const nn::Tensor<Real> m({B, H}, std::move(mask));
        h = nn::mul(h, m);
        c = nn::mul(c, m);
      }
    }
    auto out = agent_->step(nn::slice_rows(P, t * B, B), std::span<const int>(prev_actions).subspan(t * B, B),
                            std::span<const Real>(prev_rewards).subspan(t * B, B), h, c, mem, retrieval);
    logits_parts.push_back(out.logits);
    value_parts.push_back(nn::reshape(out.value, {B, 1}));
    h = out.h;
    c = out.c;
  }
  batch.logits = nn::concat_rows<Real>(logits_parts);
  batch.values = nn::reshape(nn::concat_rows<Real>(value_parts), {S * B});
  batch.actions = actions;
  batch.rewards = rewards;
  batch.dones = dones;
  batch.behavior_log_probs = behavior;
  auto rl = compute_rl_loss(batch, config_.loss_config());
  {
    const auto logp = nn::log_softmax(batch.logits.detach());
    const std::size_t A = batch.logits.dim(1);
    for (std::size_t i = 0; i < S * B; ++i) {
      const double ratio = std::exp(static_cast<double>(logp.at(i * A + actions[i])) - behavior[i]);
      diag_.max_importance_ratio_error = std::max(diag_.max_importance_ratio_error, std::abs(ratio - 1.0));
    }
  }

  nn::Tensor<Real> l_contrastive = nn::Tensor<Real>::scalar(0);
  if (fm_) {
    diag_.familiarity_added = fresh.size();
    fm_->add(std::move(fresh));
    if (uses_contrastive()) {
      auto res = fm_->contrastive_pass(*agent_, contrastive_rng_);
      if (res.ran) {
        fm_->update_momentum(res.per_entry);
        l_contrastive = res.loss;
        diag_.contrastive_ran = true;
      }
    }
  }
  ++learner_step_;
  if (uses_mem() && learner_step_ % config_.t_f == 0) transfer();

  auto loss = diag_.contrastive_ran ? total_loss(rl.total, l_contrastive, config_.contrastive_weight) : rl.total;
  try {
    optimizer_->zero_grad();
    nn::backward(loss);
    if (config_.grad_clip_norm > 0) optimizer_->clip_grad_norm(config_.grad_clip_norm);
    optimizer_->step();
    for (const auto& [name, p] : agent_->named_parameters()) {
      for (Real v : p.data()) {
        if (!std::isfinite(v)) throw TrainingError("parameter " + name + " became non-finite");
      }
    }
  } catch (const TrainingError&) {
    if (!config_.run_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(config_.run_dir, ec);
      try {
        save_checkpoint(std::filesystem::path(config_.run_dir) / "diagnostic_checkpoint.bin", false);
      } catch (const std::exception& e) {
        std::cerr << "could not write diagnostic checkpoint: " << e.what() << '\n';
      }
    }
    throw;
  }

  metrics_.learner_step = learner_step_;
  metrics_.env_steps = static_cast<std::uint64_t>(learner_step_) * S * B;
  double ret = 0, succ = 0;
  for (double r : recent_returns_) ret += r;
  for (int s : recent_success_) succ += s;
  metrics_.mean_episode_return = recent_returns_.empty() ? 0.0 : ret / static_cast<double>(recent_returns_.size());
  metrics_.zipfian_accuracy_estimate = recent_success_.empty() ? 0.0 : succ / static_cast<double>(recent_success_.size());
  metrics_.l_impala = static_cast<double>(rl.total.item());
  metrics_.l_contrastive = static_cast<double>(l_contrastive.item());
  metrics_.mem_size = mem_->size();
  metrics_.transfer_count = transfers_;
}

void Trainer::transfer() {
  if (!fm_ || fm_->size() == 0) return;
  std::vector<std::size_t> chosen;
  std::vector<double> momentum;
  if (config_.mode == Mode::full) {
    // rarity is only defined once every entry has been through a pass
    if (!fm_->all_scored()) return;
    chosen = fm_->rare_indices(config_.t_k);
    momentum = fm_->normalized_momentum();
    if (momentum_dump_) fm_->write_momentum_csv(*momentum_dump_, transfers_ + 1);
  } else {
    chosen = fm_->uniform_indices(config_.t_k, transfer_rng_);
    if (fm_->all_scored()) momentum = fm_->normalized_momentum();
  }
  std::vector<memory::MemEntry<Real>> out;
  for (auto i : chosen) {
    const auto& e = fm_->entries()[i];
    out.push_back({e.id, e.p, e.h, e.k, momentum.empty() ? 0.0 : momentum[i]});
  }
  mem_->add_entries(out);
  if (config_.refresh_keys_on_transfer) mem_->refresh_keys(agent_->key_projection());
  ++transfers_;
  if (mem_dump_) mem_->write_csv(*mem_dump_, transfers_);
  diag_.transferred = true;
}

void Trainer::train(std::ostream* metrics, std::ostream* momentum_dump, std::ostream* mem_dump,
                    std::ostream* progress) {
  momentum_dump_ = momentum_dump;
  mem_dump_ = mem_dump;
  if (metrics && learner_step_ == 0) *metrics << kMetricsHeader << '\n';
  const std::size_t total = config_.learner_steps();
  while (learner_step_ < total) {
    step();
    if (metrics) *metrics << format_metrics(metrics_) << '\n' << std::flush;
    if (progress && (learner_step_ % 50 == 0 || learner_step_ == total)) {
      *progress << "step " << learner_step_ << '/' << total << "  " << format_metrics(metrics_) << std::endl;
    }
  }
  momentum_dump_ = nullptr;
  mem_dump_ = nullptr;
}

void Trainer::save_checkpoint(const std::filesystem::path& path, bool include_familiarity) const {
  nn::Archive<Real> ar;
  const auto params = agent_->named_parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ar.put("param/" + params[i].first, params[i].second);
    ar.put("opt/" + params[i].first, params[i].second.shape(), optimizer_->mean_squares()[i]);
  }
  ar.meta["config"] = config_.to_text();
  ar.meta["learner_step"] = std::to_string(learner_step_);
  ar.meta["transfer_count"] = std::to_string(transfers_);
  ar.meta["next_episode"] = std::to_string(next_episode_);
  ar.meta["optimizer_steps"] = std::to_string(optimizer_->step_count());
  ar.meta["rng/trial"] = rng_state(trial_rng_);
  ar.meta["rng/action"] = rng_state(action_rng_);
  ar.meta["rng/contrastive"] = rng_state(contrastive_rng_);
  ar.meta["rng/transfer"] = rng_state(transfer_rng_);
  save_mem(ar, *mem_);
  if (include_familiarity && fm_ && fm_->size() > 0) {
    const auto& es = fm_->entries();
    const auto& im0 = es.front().im;
    std::vector<Real> im, k, p, h;
    std::vector<double> lm;
    std::vector<int> passes;
    std::vector<std::uint64_t> seq;
    std::vector<memory::EntryId> ids;
    for (const auto& e : es) {
      im.insert(im.end(), e.im.data.begin(), e.im.data.end());
      k.insert(k.end(), e.k.begin(), e.k.end());
      p.insert(p.end(), e.p.begin(), e.p.end());
      h.insert(h.end(), e.h.begin(), e.h.end());
      lm.push_back(e.lm);
      passes.push_back(e.passes_seen);
      seq.push_back(e.seq);
      ids.push_back(e.id);
    }
    ar.put("fm/im", {es.size(), static_cast<std::size_t>(im0.channels), static_cast<std::size_t>(im0.height),
                     static_cast<std::size_t>(im0.width)},
           im);
    put_rows(ar, "fm/k", es.size(), config_.key_dim, k);
    put_rows(ar, "fm/p", es.size(), config_.embedding_dim, p);
    put_rows(ar, "fm/h", es.size(), config_.lstm_dim, h);
    ar.meta["fm/ids"] = join_ids(ids);
    ar.meta["fm/lm"] = join_numbers(lm);
    ar.meta["fm/passes"] = join_numbers(passes);
    ar.meta["fm/seq"] = join_numbers(seq);
    ar.meta["fm/next_slot"] = std::to_string(fm_->next_slot());
    ar.meta["fm/next_seq"] = std::to_string(fm_->next_seq());
  }
  nn::save_archive(ar, path);
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  const auto ar = nn::load_archive<Real>(path);
  const auto params = agent_->named_parameters();
  load_params(ar, params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& v = ar.get("opt/" + params[i].first).values;
    optimizer_->mutable_mean_squares()[i].assign(v.begin(), v.end());
  }
  optimizer_->set_step_count(std::stoull(ar.meta_value("optimizer_steps")));
  learner_step_ = std::stoull(ar.meta_value("learner_step"));
  transfers_ = std::stoull(ar.meta_value("transfer_count"));
  next_episode_ = std::stoull(ar.meta_value("next_episode"));
  set_rng_state(trial_rng_, ar.meta_value("rng/trial"));
  set_rng_state(action_rng_, ar.meta_value("rng/action"));
  set_rng_state(contrastive_rng_, ar.meta_value("rng/contrastive"));
  set_rng_state(transfer_rng_, ar.meta_value("rng/transfer"));
  load_mem(ar, *mem_);
  if (fm_ && ar.contains("fm/im")) {
    const auto ids = split_ids(ar.meta_value("fm/ids"));
    const auto lm = split_numbers<double>(ar.meta_value("fm/lm"));
    const auto passes = split_numbers<int>(ar.meta_value("fm/passes"));
    const auto seq = split_numbers<std::uint64_t>(ar.meta_value("fm/seq"));
    const auto& ims = ar.get("fm/im");
    const std::size_t n = ids.size(), img = ims.values.size() / std::max<std::size_t>(n, 1);
    std::vector<memory::FamiliarityEntry<Real>> entries(n);
    auto slice = [&](const std::string& name, std::size_t i, std::size_t w) {
      const auto& v = ar.get(name).values;
      return std::vector<Real>(v.begin() + static_cast<std::ptrdiff_t>(i * w), v.begin() + static_cast<std::ptrdiff_t>((i + 1) * w));
    };
    for (std::size_t i = 0; i < n; ++i) {
      auto& e = entries[i];
      e.id = ids[i];
      e.im.channels = static_cast<int>(ims.shape[1]);
      e.im.height = static_cast<int>(ims.shape[2]);
      e.im.width = static_cast<int>(ims.shape[3]);
      e.im.data = slice("fm/im", i, img);
      e.k = slice("fm/k", i, config_.key_dim);
      e.p = slice("fm/p", i, config_.embedding_dim);
      e.h = slice("fm/h", i, config_.lstm_dim);
      e.lm = lm.at(i);
      e.passes_seen = passes.at(i);
      e.seq = seq.at(i);
    }
    fm_->restore(std::move(entries), std::stoull(ar.meta_value("fm/next_slot")), std::stoull(ar.meta_value("fm/next_seq")));
  }
}

LoadedAgent load_agent(const std::filesystem::path& checkpoint, const TrainConfig& config) {
  const auto ar = nn::load_archive<Real>(checkpoint);
  LoadedAgent out;
  out.config = config;
  out.agent = std::make_unique<AgentNet<Real>>(config.arch(), 0);
  load_params(ar, out.agent->named_parameters());
  out.mem = std::make_unique<memory::EpisodicMemory<Real>>(config.mem_config());
  load_mem(ar, *out.mem);
  return out;
}

}  // namespace zipfmem::agent
