#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dissect/dataset.hpp"
#include "dissect/errors.hpp"
#include "dissect/ledger.hpp"
#include "dissect/rng.hpp"
#include "dissect/strategy.hpp"

using namespace dissect;

namespace {

ScoreLedger ledger_with(const std::map<std::uint64_t, double>& hist,
                        const std::map<std::uint64_t, double>& curr) {
  ScoreLedger l;
  l.snapshot_hist(hist);
  for (const auto& [id, c] : curr) l.set_curr(id, c, 1);
  return l;
}

}  // namespace

TEST_CASE("snapshot stores scores verbatim and only once") {
  ScoreLedger l;
  l.snapshot_hist({{1, 10.0}, {2, 20.0}});
  CHECK(l.hist(1) == 10.0);
  CHECK(l.hist(2) == 20.0);
  CHECK(l.initialized());
  CHECK_THROWS_AS(l.snapshot_hist({{3, 5.0}}), AlreadyInitializedError);
}

TEST_CASE("delta requires both entries") {
  ScoreLedger l;
  l.snapshot_hist({{1, 10.0}});
  CHECK_THROWS_AS(l.delta(1), MissingScoreError);  // no curr yet
  l.set_curr(1, 4.0, 2);
  CHECK(l.delta(1) == doctest::Approx(6.0));
  CHECK_THROWS_AS(l.delta(7), MissingScoreError);
}

TEST_CASE("momentum update arithmetic matches Eq.-style EMA") {
  ScoreLedger l;
  l.update_hist_momentum(0, 10.0, 0.9);  // first observation: hist = curr
  CHECK(l.hist(0) == doctest::Approx(10.0));
  l.update_hist_momentum(0, 20.0, 0.9);
  CHECK(l.hist(0) == doctest::Approx(11.0));
}

TEST_CASE("momentum update rejects beta outside (0,1)") {
  ScoreLedger l;
  CHECK_THROWS_AS(l.update_hist_momentum(0, 1.0, 0.0), InvalidBetaError);
  CHECK_THROWS_AS(l.update_hist_momentum(0, 1.0, 1.0), InvalidBetaError);
  CHECK_THROWS_AS(l.update_hist_momentum(0, 1.0, -0.5), InvalidBetaError);
}

TEST_CASE("beta near one freezes the history") {
  ScoreLedger l;
  l.update_hist_momentum(0, 50.0, 0.999999);
  for (int t = 0; t < 100; ++t) {
    const double before = l.hist(0);
    l.update_hist_momentum(0, 99.0, 0.999999);
    CHECK(std::abs(l.hist(0) - before) < 1e-4);
  }
}

TEST_CASE("constant observations converge geometrically") {
  ScoreLedger l;
  const double beta = 0.8, c = 42.0;
  l.update_hist_momentum(0, 10.0, beta);
  double gap = std::abs(l.hist(0) - c);
  for (int t = 0; t < 60; ++t) {
    l.update_hist_momentum(0, c, beta);
    const double next = std::abs(l.hist(0) - c);
    CHECK(next == doctest::Approx(gap * beta).epsilon(1e-9));
    gap = next;
  }
}

TEST_CASE("momentum ledger reproduces the closed-form geometric recursion") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> score(0.0, 100.0);
  std::uniform_real_distribution<double> betad(0.05, 0.95);
  std::uniform_int_distribution<int> len(1, 64);
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = betad(rng);
    const int t = len(rng);
    std::vector<double> obs(static_cast<std::size_t>(t));
    for (auto& o : obs) o = score(rng);

    ScoreLedger l;
    for (double o : obs) l.update_hist_momentum(5, o, beta);

    // Closed form: beta^(t-1) * obs0 + (1-beta) * sum beta^(t-1-i) obs_i.
    long double expect = obs[0];
    for (std::size_t i = 1; i < obs.size(); ++i)
      expect = static_cast<long double>(beta) * expect +
               (1.0L - static_cast<long double>(beta)) * static_cast<long double>(obs[i]);
    CHECK(std::abs(l.hist(5) - static_cast<double>(expect)) < 1e-12);
  }
}

TEST_CASE("delta examples") {
  auto l = ledger_with({{0, 25.0}, {1, 10.0}}, {{0, 20.0}, {1, 10.0}});
  CHECK(l.delta(0) == doctest::Approx(5.0));
  CHECK(l.delta(1) == doctest::Approx(0.0));
}

TEST_CASE("top-delta selection picks the documented examples") {
  const std::vector<std::uint64_t> ids{0, 1, 2, 3};
  auto l = ledger_with({{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}},
                       {{0, 0.5}, {1, 1.2}, {2, 0.1}, {3, 0.9}});
  // deltas: 0.5, -0.2, 0.9, 0.1
  SelectionStrategy strat{StrategyKind::kDissectWarmup, 0.5, 0.9, 2};
  SelectionContext ctx;
  ctx.ledger = &l;
  const auto sel = select(strat, ids, ctx);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0] == 2);
  CHECK(sel[1] == 0);

  SelectionStrategy full{StrategyKind::kDissectWarmup, 1.0, 0.9, 2};
  const auto all = select(full, ids, ctx);
  CHECK(all == std::vector<std::uint64_t>{2, 0, 3, 1});  // delta-sorted order
}

TEST_CASE("equal deltas break ties by ascending id") {
  const std::vector<std::uint64_t> ids{7, 3, 5, 1};
  ScoreLedger l;
  l.snapshot_hist({{7, 2.0}, {3, 2.0}, {5, 2.0}, {1, 2.0}});
  for (auto id : ids) l.set_curr(id, 2.0, 1);
  SelectionStrategy strat{StrategyKind::kDissectWarmup, 0.5, 0.9, 2};
  SelectionContext ctx;
  ctx.ledger = &l;
  const auto sel = select(strat, ids, ctx);
  CHECK(sel == std::vector<std::uint64_t>{1, 3});
}

TEST_CASE("wrongly-memorized samples rank last under top-delta") {
  const std::vector<std::uint64_t> ids{0, 1, 2};
  auto l = ledger_with({{0, 30.0}, {1, 30.0}, {2, 10.0}},
                       {{0, 28.0}, {1, 29.0}, {2, 60.0}});  // id 2: curr >> hist
  SelectionStrategy strat{StrategyKind::kDissectWarmup, 1.0, 0.9, 2};
  SelectionContext ctx;
  ctx.ledger = &l;
  const auto sel = select(strat, ids, ctx);
  CHECK(sel.back() == 2);
}

TEST_CASE("loss and score strategies rank as documented") {
  const std::vector<std::uint64_t> ids{0, 1, 2, 3};
  const std::vector<double> losses{0.4, 0.9, 0.1, 0.6};
  const std::vector<double> scores{10.0, 50.0, 30.0, 20.0};
  SelectionContext ctx;
  ctx.losses = losses;
  ctx.clip_scores = scores;

  CHECK(select({StrategyKind::kBigLoss, 0.5, 0.9, 2}, ids, ctx) ==
        std::vector<std::uint64_t>{1, 3});
  CHECK(select({StrategyKind::kSmallLoss, 0.5, 0.9, 2}, ids, ctx) ==
        std::vector<std::uint64_t>{2, 0});
  CHECK(select({StrategyKind::kClipScoreOnline, 0.5, 0.9, 2}, ids, ctx) ==
        std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("oracle ranks clean first, then by score") {
  const std::vector<std::uint64_t> ids{0, 1, 2, 3};
  const std::vector<double> scores{10.0, 90.0, 40.0, 20.0};
  const std::vector<std::uint8_t> noisy{0, 1, 0, 1};
  SelectionContext ctx;
  ctx.clip_scores = scores;
  ctx.is_noisy = noisy;
  const auto sel = select({StrategyKind::kClipScoreOracle, 0.75, 0.9, 2}, ids, ctx);
  CHECK(sel == std::vector<std::uint64_t>{2, 0, 1});
}

TEST_CASE("missing context fields are named") {
  const std::vector<std::uint64_t> ids{0, 1};
  SelectionContext empty;
  try {
    select({StrategyKind::kBigLoss, 0.5, 0.9, 2}, ids, empty);
    FAIL("expected MissingContextError");
  } catch (const MissingContextError& e) {
    CHECK(e.field() == std::string("losses"));
  }
  CHECK_THROWS_AS(select({StrategyKind::kDissectMomentum, 0.5, 0.9, 2}, ids, empty),
                  MissingContextError);
  CHECK_THROWS_AS(select({StrategyKind::kClipScoreOracle, 0.5, 0.9, 2}, ids, empty),
                  MissingContextError);
  CHECK_THROWS_AS(select({StrategyKind::kRandomOnline, 0.5, 0.9, 2}, ids, empty),
                  MissingContextError);
}

TEST_CASE("random online keeps batch order and is deterministic per stream") {
  const std::vector<std::uint64_t> ids{9, 4, 6, 2, 8, 0};
  SelectionStrategy strat{StrategyKind::kRandomOnline, 0.5, 0.9, 2};
  auto rng1 = make_stream(1, RngStream::kSelection, 3, 0);
  auto rng2 = make_stream(1, RngStream::kSelection, 3, 0);
  SelectionContext c1, c2;
  c1.rng = &rng1;
  c2.rng = &rng2;
  const auto a = select(strat, ids, c1);
  const auto b = select(strat, ids, c2);
  CHECK(a == b);
  REQUIRE(a.size() == 3);
  // Selected ids appear in batch-relative order.
  std::vector<std::size_t> positions;
  for (auto id : a)
    positions.push_back(static_cast<std::size_t>(
        std::find(ids.begin(), ids.end(), id) - ids.begin()));
  CHECK(std::is_sorted(positions.begin(), positions.end()));

  // Full budget returns the batch unchanged without consuming the stream.
  SelectionStrategy full{StrategyKind::kRandomOnline, 1.0, 0.9, 2};
  SelectionContext none;  // rng not needed at r = 1
  CHECK(select(full, ids, none) == ids);
}

TEST_CASE("selection contracts hold over randomized property cases") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size_dist(1, 48);
  std::uniform_real_distribution<double> r_dist(0.01, 1.0);
  std::uniform_real_distribution<double> score_dist(0.0, 100.0);
  std::uniform_int_distribution<int> coarse(0, 6);

  for (int trial = 0; trial < 3000; ++trial) {
    const int n = size_dist(rng);
    std::set<std::uint64_t> idset;
    std::uniform_int_distribution<std::uint64_t> idd(0, 5000);
    while (static_cast<int>(idset.size()) < n) idset.insert(idd(rng));
    std::vector<std::uint64_t> ids(idset.begin(), idset.end());
    std::shuffle(ids.begin(), ids.end(), rng);

    // Ties are generated as identical (hist, curr) value pairs shared across
    // ids; equal-difference-but-distinct pairs would not survive rescaling
    // exactly in floating point.
    ScoreLedger ledger;
    std::map<std::uint64_t, double> hist;
    std::map<std::uint64_t, double> curr;
    const bool make_ties = trial % 3 == 0;
    if (make_ties) {
      const int pool_size = std::max(1, coarse(rng));
      std::vector<std::pair<double, double>> pool;
      for (int i = 0; i < pool_size; ++i) pool.emplace_back(score_dist(rng), score_dist(rng));
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (auto id : ids) {
        const auto& [h, c] = pool[pick(rng)];
        hist[id] = h;
        curr[id] = c;
      }
    } else {
      for (auto id : ids) {
        hist[id] = score_dist(rng);
        curr[id] = score_dist(rng);
      }
    }
    ledger.snapshot_hist(hist);
    for (auto id : ids) ledger.set_curr(id, curr[id], 1);

    const double r = r_dist(rng);
    SelectionStrategy strat{StrategyKind::kDissectWarmup, r, 0.9, 2};
    SelectionContext ctx;
    ctx.ledger = &ledger;
    const auto sel = select(strat, ids, ctx);

    // Budget exactness.
    const auto expected_k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(r * static_cast<double>(n))));
    CHECK(sel.size() == expected_k);

    // Dominance: min selected delta >= max unselected delta.
    std::set<std::uint64_t> chosen(sel.begin(), sel.end());
    double min_sel = 1e300, max_unsel = -1e300;
    for (auto id : ids) {
      const double d = ledger.delta(id);
      if (chosen.count(id)) min_sel = std::min(min_sel, d);
      else max_unsel = std::max(max_unsel, d);
    }
    if (chosen.size() < ids.size()) CHECK(min_sel >= max_unsel);

    // Stable tie-break: selection equals sorting by (delta desc, id asc).
    std::vector<std::uint64_t> sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end(), [&](std::uint64_t a, std::uint64_t b) {
      const double da = ledger.delta(a), db = ledger.delta(b);
      if (da != db) return da > db;
      return a < b;
    });
    sorted_ids.resize(expected_k);
    CHECK(sel == sorted_ids);

    // Determinism.
    CHECK(select(strat, ids, ctx) == sel);

    // w-argsort invariance: rescaling every score rescales delta but not the
    // selection.
    const double w_factor = std::uniform_real_distribution<double>(0.01, 250.0)(rng);
    ScoreLedger scaled;
    std::map<std::uint64_t, double> hist2;
    for (auto& [id, h] : hist) hist2[id] = h * w_factor;
    scaled.snapshot_hist(hist2);
    for (auto id : ids) scaled.set_curr(id, ledger.curr(id) * w_factor, 1);
    SelectionContext ctx2;
    ctx2.ledger = &scaled;
    CHECK(select(strat, ids, ctx2) == sel);
  }
}

TEST_CASE("non-oracle strategies ignore ground truth flags") {
  std::mt19937_64 rng(88);
  const std::vector<std::uint64_t> ids{0, 1, 2, 3, 4, 5};
  std::vector<double> losses, scores;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    losses.push_back(u(rng));
    scores.push_back(100.0 * u(rng));
  }
  const std::vector<std::uint8_t> truth{1, 0, 1, 0, 1, 0};

  ScoreLedger ledger;
  ledger.snapshot_hist({{0, 5}, {1, 9}, {2, 2}, {3, 7}, {4, 1}, {5, 4}});
  for (auto id : ids) ledger.set_curr(id, 3.0, 1);

  for (auto kind : {StrategyKind::kRandomOnline, StrategyKind::kBigLoss,
                    StrategyKind::kSmallLoss, StrategyKind::kClipScoreOnline,
                    StrategyKind::kDissectWarmup, StrategyKind::kDissectMomentum}) {
    SelectionStrategy strat{kind, 0.5, 0.9, 2};
    auto rng_a = make_stream(4, RngStream::kSelection, 1, 1);
    auto rng_b = make_stream(4, RngStream::kSelection, 1, 1);
    SelectionContext with, without;
    with.losses = losses;
    with.clip_scores = scores;
    with.ledger = &ledger;
    with.rng = &rng_a;
    with.is_noisy = truth;
    without.losses = losses;
    without.clip_scores = scores;
    without.ledger = &ledger;
    without.rng = &rng_b;
    CHECK(select(strat, ids, with) == select(strat, ids, without));
  }
}

TEST_CASE("random coreset keeps round(r*n) samples") {
  const auto ds = generate_clean(1000, 4, 4, 10, 0.1, 44);
  auto rng = make_stream(44, RngStream::kCoreset);
  const auto out =
      coreset_filter({StrategyKind::kRandomCoreset, 0.5, 0.9, 2}, ds, {}, rng);
  CHECK(out.size() == 500);
  // ids preserved from the source dataset
  for (const auto& s : out.samples) CHECK(s.id < 1000);
}

TEST_CASE("oracle coreset keeps no noisy samples when the clean pool suffices") {
  auto ds = generate_clean(200, 4, 4, 10, 0.1, 45);
  ds = inject_noise(ds, 0.3, 9);
  std::vector<double> scores(200, 0.0);
  auto rng = make_stream(45, RngStream::kCoreset);
  const auto out =
      coreset_filter({StrategyKind::kClipScoreOracle, 0.7, 0.9, 2}, ds, scores, rng);
  CHECK(out.size() == 140);
  CHECK(out.noisy_count() == 0);
}

TEST_CASE("coreset at r=1 is the identity") {
  const auto ds = generate_clean(50, 4, 4, 5, 0.1, 46);
  auto rng = make_stream(46, RngStream::kCoreset);
  const auto out = coreset_filter({StrategyKind::kRandomCoreset, 1.0, 0.9, 2}, ds, {}, rng);
  REQUIRE(out.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(out.samples[i].id == ds.samples[i].id);
}

TEST_CASE("coreset rejects online-only strategies") {
  const auto ds = generate_clean(10, 4, 4, 2, 0.1, 47);
  auto rng = make_stream(47, RngStream::kCoreset);
  CHECK_THROWS_AS(coreset_filter({StrategyKind::kSmallLoss, 0.5, 0.9, 2}, ds, {}, rng),
                  InvalidStrategyError);
}

TEST_CASE("strategy validation") {
  CHECK_THROWS_AS(SelectionStrategy({StrategyKind::kRandomOnline, 0.0, 0.9, 2}).validate(),
                  InvalidConfigError);
  CHECK_THROWS_AS(SelectionStrategy({StrategyKind::kRandomOnline, 1.2, 0.9, 2}).validate(),
                  InvalidConfigError);
  CHECK_THROWS_AS(SelectionStrategy({StrategyKind::kDissectMomentum, 0.5, 1.0, 2}).validate(),
                  InvalidConfigError);
  CHECK_THROWS_AS(SelectionStrategy({StrategyKind::kDissectWarmup, 0.5, 0.9, 0}).validate(),
                  InvalidConfigError);
  CHECK_NOTHROW(SelectionStrategy({StrategyKind::kDissectWarmup, 0.5, 0.9, 2}).validate());
}
