#include "dissect/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dissect/errors.hpp"
#include "dissect/info_nce.hpp"
#include "dissect/rng.hpp"
#include "dissect/version.hpp"

namespace dissect {

namespace {

constexpr double kDivergenceThreshold = 1e6;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t sample_feature_hash(const PairedSample& s) {
  std::uint64_t h = fnv1a(s.img_feat.data(), s.img_feat.size() * sizeof(float));
  return fnv1a(s.txt_feat.data(), s.txt_feat.size() * sizeof(float), h);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfigError("epochs must be >= 1");
  if (batch_size < 2) throw InvalidConfigError("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw InvalidConfigError("learning_rate must be positive");
  if (!(optimizer_momentum >= 0.0 && optimizer_momentum < 1.0))
    throw InvalidConfigError("optimizer momentum must lie in [0,1)");
  if (!(w > 0.0)) throw InvalidConfigError("w must be positive");
  strategy.validate();
  if (strategy.kind == StrategyKind::kDissectWarmup && epochs < strategy.warmup_epochs)
    throw InvalidConfigError("epochs must be >= warm-up epochs");
  if (oracle_as_coreset && strategy.kind != StrategyKind::kClipScoreOracle)
    throw InvalidConfigError("oracle_as_coreset applies only to clipscore-oracle");
}

std::string config_echo(const TrainConfig& cfg) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "epochs = " << cfg.epochs << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "learning_rate = " << num(cfg.learning_rate) << "\n";
  os << "lr_schedule = " << (cfg.lr_schedule == LrSchedule::kCosine ? "cosine" : "constant")
     << "\n";
  os << "optimizer_momentum = " << num(cfg.optimizer_momentum) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "strategy = " << strategy_kind_name(cfg.strategy.kind) << "\n";
  os << "r = " << num(cfg.strategy.r) << "\n";
  if (cfg.strategy.kind == StrategyKind::kDissectMomentum)
    os << "beta = " << num(cfg.strategy.beta) << "\n";
  if (cfg.strategy.kind == StrategyKind::kDissectWarmup)
    os << "tw = " << cfg.strategy.warmup_epochs << "\n";
  if (cfg.oracle_as_coreset) os << "oracle_as_coreset = 1\n";
  os << "w = " << num(cfg.w) << "\n";
  os << "d_emb = " << cfg.model.embed_dim << "\n";
  os << "depth = " << cfg.model.depth << "\n";
  os << "d_hidden = " << cfg.model.hidden_dim << "\n";
  os << "tau_init = " << num(cfg.model.tau_init) << "\n";
  return os.str();
}

std::map<std::uint64_t, double> score_dataset(const EncoderParams& params, const Dataset& dataset,
                                              double w, int batch_size) {
  std::map<std::uint64_t, double> scores;
  const std::size_t n = dataset.size();
  const std::size_t bs = std::max(1, batch_size);
  std::vector<std::uint32_t> rows;
  for (std::size_t b0 = 0; b0 < n; b0 += bs) {
    const std::size_t b1 = std::min(n, b0 + bs);
    rows.clear();
    for (std::size_t i = b0; i < b1; ++i) rows.push_back(static_cast<std::uint32_t>(i));
    const BatchForward fwd = forward_batch(params, dataset, rows, w);
    for (std::size_t i = 0; i < fwd.size(); ++i) scores[fwd.ids[i]] = fwd.clip_scores[i];
  }
  return scores;
}

Trainer::Trainer(const TrainConfig& cfg, const Dataset& train, const Dataset& eval)
    : cfg_(cfg), train_(train), eval_(eval) {
  cfg_.validate();
  if (train_.size() == 0) throw InvalidConfigError("training set is empty");
  state_.params = init_encoder(cfg_.model, train_.d_img_in, train_.d_txt_in, cfg_.seed);
  state_.velocity = make_optimizer_state(state_.params);
  const std::uint64_t steps_per_epoch =
      (train_.size() + cfg_.batch_size - 1) / static_cast<std::size_t>(cfg_.batch_size);
  total_steps_ = steps_per_epoch * static_cast<std::uint64_t>(cfg_.epochs);
  result_.config_echo = config_echo(cfg_);
  result_.seed = cfg_.seed;
  result_.version = kArtifactVersion;
  result_.has_ground_truth = train_.ground_truth_available;
}

std::vector<std::uint32_t> Trainer::epoch_permutation(int epoch_number) const {
  std::vector<std::uint32_t> perm(train_.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_stream(cfg_.seed, RngStream::kShuffle, static_cast<std::uint64_t>(epoch_number));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

void Trainer::run_epoch(bool selective) {
  const auto t0 = std::chrono::steady_clock::now();
  const int epoch_number = state_.epoch + 1;
  const auto perm = epoch_permutation(epoch_number);
  const std::size_t n = train_.size();
  const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
  const bool momentum_kind = cfg_.strategy.kind == StrategyKind::kDissectMomentum;
  const bool oracle_kind = cfg_.strategy.kind == StrategyKind::kClipScoreOracle;

  double loss_sum = 0.0;
  std::size_t steps = 0;
  std::vector<std::uint64_t> epoch_selected;
  epoch_selected.reserve(n);

  std::size_t batch_index = 0;
  for (std::size_t b0 = 0; b0 < n; b0 += bs, ++batch_index) {
    const std::size_t b1 = std::min(n, b0 + bs);
    const std::span<const std::uint32_t> rows(perm.data() + b0, b1 - b0);
    const std::size_t nb = rows.size();

    const BatchForward fwd = forward_batch(state_.params, train_, rows, cfg_.w);
    state_.forward_count += nb;
    const std::vector<double> losses = per_sample_losses(fwd.sim, state_.params.tau);

    std::vector<std::uint8_t> had_hist;
    if (momentum_kind) {
      had_hist.resize(nb);
      for (std::size_t i = 0; i < nb; ++i)
        had_hist[i] = state_.ledger.has_hist(fwd.ids[i]) ? 1 : 0;
    }
    for (std::size_t i = 0; i < nb; ++i)
      state_.ledger.set_curr(fwd.ids[i], fwd.clip_scores[i], epoch_number);
    if (momentum_kind && selective) {
      // First observation seeds hist with curr so delta starts at zero.
      for (std::size_t i = 0; i < nb; ++i)
        if (!had_hist[i])
          state_.ledger.update_hist_momentum(fwd.ids[i], fwd.clip_scores[i], cfg_.strategy.beta);
    }

    std::vector<std::uint64_t> selected;
    if (selective) {
      SelectionContext ctx;
      ctx.losses = losses;
      ctx.clip_scores = fwd.clip_scores;
      ctx.ledger = &state_.ledger;
      ctx.epoch = epoch_number;
      auto rng = make_stream(cfg_.seed, RngStream::kSelection,
                             static_cast<std::uint64_t>(epoch_number), batch_index);
      ctx.rng = &rng;
      std::vector<std::uint8_t> noisy_flags;
      if (oracle_kind && train_.ground_truth_available) {
        noisy_flags.resize(nb);
        for (std::size_t i = 0; i < nb; ++i) noisy_flags[i] = train_.samples[rows[i]].is_noisy;
        ctx.is_noisy = noisy_flags;
      }
      selected = select(cfg_.strategy, fwd.ids, ctx);
    } else {
      selected.assign(fwd.ids.begin(), fwd.ids.end());
    }

    if (momentum_kind && selective) {
      // Eq.-5 update with this batch's pre-selection score, after delta was
      // formed against the previous historical state.
      for (std::size_t i = 0; i < nb; ++i)
        if (had_hist[i])
          state_.ledger.update_hist_momentum(fwd.ids[i], fwd.clip_scores[i], cfg_.strategy.beta);
    }

    // Map selected ids back to batch positions; loss and gradients see only
    // the selected samples (their own in-batch negatives).
    std::unordered_map<std::uint64_t, std::size_t> pos;
    pos.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i) pos.emplace(fwd.ids[i], i);
    std::vector<std::size_t> keep;
    keep.reserve(selected.size());
    for (auto id : selected) keep.push_back(pos.at(id));

    const BatchForward sub = keep.size() == nb ? fwd : make_sub_forward(fwd, keep);
    const double loss = info_nce_loss(sub.sim, state_.params.tau);
    if (!std::isfinite(loss) || loss > kDivergenceThreshold)
      throw NumericalDivergenceError(epoch_number, state_.step, loss);
    const EncoderGradients grads = info_nce_gradients(state_.params, sub);

    const double lr = lr_at(cfg_.lr_schedule, cfg_.learning_rate, state_.step, total_steps_);
    optimizer_step(state_.params, state_.velocity, grads, lr, cfg_.optimizer_momentum);
    state_.step += 1;
    state_.backward_count += keep.size();

    loss_sum += loss;
    steps += 1;
    epoch_selected.insert(epoch_selected.end(), selected.begin(), selected.end());
  }

  state_.epoch = epoch_number;

  EpochRow row;
  row.epoch = epoch_number;
  row.loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;

  const int ks[] = {1, 5, 10};
  const RecallTable recall = recall_at_k(state_.params, eval_, ks);
  row.tr1 = recall.img_to_txt[0];
  row.tr5 = recall.img_to_txt[1];
  row.tr10 = recall.img_to_txt[2];
  row.ir1 = recall.txt_to_img[0];
  row.ir5 = recall.txt_to_img[1];
  row.ir10 = recall.txt_to_img[2];

  if (train_.ground_truth_available) {
    row.tp_acc = tp_accuracy(epoch_selected, train_);
    std::map<std::uint64_t, double> curr;
    for (const auto& [id, e] : state_.ledger.entries())
      if (e.has_curr) curr[id] = e.curr;
    const DistributionStats stats = distribution_stats(curr, train_, cfg_.w);
    row.clean_mean = stats.clean_mean;
    row.noisy_mean = stats.noisy_mean;
    row.clean_var = stats.clean_var;
    row.noisy_var = stats.noisy_var;
    row.overlap = stats.overlap;
  }

  row.fwd = state_.forward_count;
  row.bwd = state_.backward_count;
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  result_.rows.push_back(row);
  if (observer_) observer_(state_, row);
}

void Trainer::warmup() {
  if (cfg_.strategy.kind != StrategyKind::kDissectWarmup)
    throw ConfigMismatchError("warmup requires the dissect-warmup strategy");
  if (state_.ledger.initialized())
    throw ConfigMismatchError("warmup requires an uninitialized ledger");
  for (int e = 0; e < cfg_.strategy.warmup_epochs; ++e) run_epoch(/*selective=*/false);
  // Historical snapshot from one full-dataset scoring pass.
  const auto scores = score_dataset(state_.params, train_, cfg_.w, cfg_.batch_size);
  state_.forward_count += train_.size();
  state_.ledger.snapshot_hist(scores);
}

void Trainer::train_epoch() { run_epoch(/*selective=*/true); }

RunOutput Trainer::run() {
  int remaining = cfg_.epochs;
  if (cfg_.strategy.kind == StrategyKind::kDissectWarmup) {
    warmup();
    remaining -= cfg_.strategy.warmup_epochs;
  }
  for (int e = 0; e < remaining; ++e) train_epoch();
  return RunOutput{result_, state_};
}

RunOutput train_run(const TrainConfig& cfg, const Dataset& train, const Dataset& eval,
                    const EpochObserver& observer) {
  cfg.validate();
  if (eval.size() == 0) throw InvalidConfigError("eval split is empty");
  if (eval.d_img_in != train.d_img_in || eval.d_txt_in != train.d_txt_in)
    throw ConfigMismatchError("eval split feature dims differ from training set");
  if (eval.ground_truth_available && eval.noisy_count() != 0)
    throw ConfigMismatchError("eval split must be noise-free");

  // Disjointness check: no eval sample may share feature bytes with a
  // training sample.
  std::unordered_multimap<std::uint64_t, const PairedSample*> train_hashes;
  train_hashes.reserve(train.size());
  for (const auto& s : train.samples) train_hashes.emplace(sample_feature_hash(s), &s);
  for (const auto& s : eval.samples) {
    auto [lo, hi] = train_hashes.equal_range(sample_feature_hash(s));
    for (auto it = lo; it != hi; ++it) {
      if (it->second->img_feat == s.img_feat && it->second->txt_feat == s.txt_feat)
        throw ConfigMismatchError("eval split overlaps the training set (sample " +
                                  std::to_string(s.id) + ")");
    }
  }

  const bool coreset = cfg.strategy.kind == StrategyKind::kRandomCoreset ||
                       (cfg.strategy.kind == StrategyKind::kClipScoreOracle &&
                        cfg.oracle_as_coreset);
  if (!coreset) {
    Trainer trainer(cfg, train, eval);
    if (observer) trainer.set_observer(observer);
    return trainer.run();
  }

  // One-shot filter, then full-batch training on the subset. Oracle scores
  // come from the freshly initialized model.
  std::vector<double> scores;
  if (cfg.strategy.kind == StrategyKind::kClipScoreOracle) {
    const EncoderParams init =
        init_encoder(cfg.model, train.d_img_in, train.d_txt_in, cfg.seed);
    const auto by_id = score_dataset(init, train, cfg.w, cfg.batch_size);
    scores.reserve(train.size());
    for (const auto& s : train.samples) scores.push_back(by_id.at(s.id));
  }
  auto rng = make_stream(cfg.seed, RngStream::kCoreset);
  const Dataset filtered = coreset_filter(cfg.strategy, train, scores, rng);
  if (filtered.size() < 2) throw InvalidConfigError("coreset too small to train on");

  TrainConfig inner = cfg;
  inner.strategy = SelectionStrategy{StrategyKind::kRandomOnline, 1.0, 0.9, 2};
  inner.oracle_as_coreset = false;
  Trainer trainer(inner, filtered, eval);
  if (observer) trainer.set_observer(observer);
  RunOutput out = trainer.run();
  out.result.config_echo = config_echo(cfg);  // report the requested strategy
  return out;
}

ExperimentResult run_experiment(const TrainConfig& cfg, const Dataset& train,
                                const Dataset& eval) {
  return train_run(cfg, train, eval).result;
}

}  // namespace dissect
