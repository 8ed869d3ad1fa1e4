#include <doctest.h>

#include <cmath>

#include "dialogctl/rl_trainer.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace dialogctl;

namespace {

constexpr std::size_t D = 4, H = 3, A = 4;

// Random episode whose behaviour probabilities come from `behavior`.
Episode random_episode(const ModelParams& behavior, std::size_t T, Rng& rng, double reward) {
  Episode e;
  ModelState state = initial_state(behavior);
  for (std::size_t t = 0; t < T; ++t) {
    EpisodeStep s;
    s.features = testing::random_inputs(1, D, rng)[0];
    s.mask = ActionMask(A, true);
    s.mask.set(rng.below(A), false);
    auto out = forward_step(behavior, state, s.features);
    state = out.state;
    const auto q = masked_distribution(out.logits, s.mask);
    s.action = select_action(q, SelectionMode::Sample, rng);
    s.behavior_prob = q[s.action];
    e.steps.push_back(s);
  }
  e.reward = reward;
  e.ret = compute_return(reward, T);
  return e;
}

std::vector<double> target_probs(const ModelParams& p, const Episode& e) {
  std::vector<std::vector<double>> xs;
  for (const auto& s : e.steps) xs.push_back(s.features);
  const auto z = oracle::logits(p, xs);
  std::vector<double> out;
  for (std::size_t t = 0; t < z.size(); ++t)
    out.push_back(oracle::masked_softmax(z[t], e.steps[t].mask.bits)[e.steps[t].action]);
  return out;
}

}  // namespace

TEST_CASE("discounted terminal return") {
  CHECK(compute_return(1.0, 1) == 1.0);
  CHECK(compute_return(1.0, 3) == doctest::Approx(0.9025));
  CHECK(compute_return(0.0, 7) == 0.0);
  CHECK(compute_return(2.0, 2, 0.5) == 1.0);
  CHECK_THROWS(compute_return(1.0, 0));
}

TEST_CASE("episode from records") {
  std::vector<TurnRecord> recs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    recs[i].action = i;
    recs[i].behavior_prob = 0.5;
    recs[i].mask = ActionMask(4, true);
  }
  const auto e = Episode::from_records(recs, 1.0);
  CHECK(e.steps.size() == 3);
  CHECK(e.behavior_prob() == 0.125);
  CHECK(e.ret == doctest::Approx(0.9025));
  CHECK(Episode::from_records({}, 1.0).ret == 0.0);
}

TEST_CASE("baseline buffer keeps the most recent episodes") {
  BaselineBuffer b(3);
  for (int i = 0; i < 5; ++i) {
    Episode e;
    e.reward = i;
    b.push(e);
  }
  CHECK(b.size() == 3);
  CHECK(b.episodes().front().reward == 2);
  CHECK(b.episodes().back().reward == 4);
  CHECK_THROWS(BaselineBuffer(0));
}

TEST_CASE("WIS baseline matches the reference") {
  Rng rng(21);
  const auto behavior = testing::random_model(ModelKind::LSTM, D, H, A, 1);
  const auto target = testing::random_model(ModelKind::LSTM, D, H, A, 2);
  BaselineBuffer buf(20);
  std::vector<std::vector<double>> tp, bp;
  std::vector<double> rets;
  for (int i = 0; i < 30; ++i) {
    auto e = random_episode(behavior, 1 + rng.below(6), rng, rng.bernoulli(0.5) ? 1.0 : 0.0);
    buf.push(e);
  }
  for (const auto& e : buf.episodes()) {
    tp.push_back(target_probs(target, e));
    std::vector<double> b;
    for (const auto& s : e.steps) b.push_back(s.behavior_prob);
    bp.push_back(b);
    rets.push_back(e.ret);
  }
  for (double clip : {10.0, 1.5}) {
    const double expect = oracle::wis(tp, bp, rets, clip);
    CHECK(estimate_baseline_serial(buf, target, clip) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(estimate_baseline(buf, target, clip) == estimate_baseline_serial(buf, target, clip));
  }
  // Same policy: every weight is one, so the estimate is the mean return.
  double mean = 0.0;
  for (double r : rets) mean += r;
  mean /= double(rets.size());
  CHECK(estimate_baseline(buf, behavior) == doctest::Approx(mean).epsilon(1e-12));
  CHECK(estimate_baseline(BaselineBuffer(5), behavior) == 0.0);
}

TEST_CASE("WIS hand example") {
  // Weights 2 and 0.5, returns 1 and 0: (2*1 + 0.5*0) / 2.5 = 0.8.
  const double got = oracle::wis({{0.4}, {0.1}}, {{0.2}, {0.2}}, {1.0, 0.0}, 10.0);
  CHECK(got == doctest::Approx(0.8));
}

TEST_CASE("importance weight is clipped without overflow") {
  Rng rng(4);
  const auto behavior = testing::random_model(ModelKind::RNN, D, H, A, 5);
  auto e = random_episode(behavior, 200, rng, 1.0);
  for (auto& s : e.steps) s.behavior_prob = 1e-6;  // ratio (q / 1e-6)^200 overflows
  const double w = importance_weight(behavior, e, 10.0);
  CHECK(w == 10.0);
  auto zero = e;
  zero.steps[0].behavior_prob = 0.0;
  CHECK_THROWS(importance_weight(behavior, zero));
}

TEST_CASE("log-probability gradient matches finite differences") {
  Rng rng(8);
  for (auto kind : {ModelKind::LSTM, ModelKind::RNN, ModelKind::DNN}) {
    const auto p = testing::random_model(kind, D, H, A, 10);
    const auto e = random_episode(p, 5, rng, 1.0);
    const auto g = log_prob_gradient(p, e, 1e-8);
    const auto numeric = oracle::numeric_gradient(p, [&](const ModelParams& q) {
      double s = 0.0;
      for (double v : target_probs(q, e)) s += std::log(v + 1e-8);
      return s;
    });
    CHECK(oracle::max_rel_error(g, numeric) < 1e-6);
  }
}

TEST_CASE("policy gradient update is AdaDelta ascent on the scaled gradient") {
  Rng rng(9);
  auto p = testing::random_model(ModelKind::LSTM, D, H, A, 11);
  const auto e = random_episode(p, 4, rng, 1.0);
  const PgOptions pg{0.5, 1e-8};
  const double baseline = 0.3;
  auto g = log_prob_gradient(p, e, pg.eps);

  std::vector<double> x;
  for (const auto& t : p.tensors) x.insert(x.end(), t.values.begin(), t.values.end());
  std::size_t k = 0;
  for (const auto& t : g.tensors)
    for (double v : t.values) {
      oracle::ScalarAdaDelta s;
      x[k] = s.step(x[k], pg.alpha * (e.ret - baseline) * v, -1.0);
      ++k;
    }

  AdaDeltaState opt(p);
  REQUIRE(policy_gradient_update(p, opt, e, baseline, pg));
  k = 0;
  for (const auto& t : p.tensors)
    for (double v : t.values) CHECK(v == doctest::Approx(x[k++]).epsilon(1e-12));

  // Zero advantage: nothing moves.
  const auto before = p;
  auto flat = e;
  flat.ret = baseline;
  CHECK_FALSE(policy_gradient_update(p, opt, flat, baseline, pg));
  CHECK(p == before);
}

TEST_CASE("positive advantage raises the probability of the chosen actions") {
  Rng rng(10);
  auto p = testing::random_model(ModelKind::LSTM, D, H, A, 12);
  const auto e = random_episode(p, 3, rng, 1.0);
  double before = 0.0, after = 0.0;
  for (double v : target_probs(p, e)) before += std::log(v);
  AdaDeltaState opt(p);
  for (int i = 0; i < 20; ++i) policy_gradient_update(p, opt, e, 0.0);
  for (double v : target_probs(p, e)) after += std::log(v);
  CHECK(after > before);
}

TEST_CASE("guarded update keeps the corpus reconstructed") {
  const auto& domain = testing::phone_domain();
  const auto& all = testing::phone_data();
  const std::vector<TrainingSequence> corpus(all.begin(), all.begin() + 3);
  auto p = init_model(ModelKind::LSTM, FeatureLayout::of(domain).dim, 16, domain.n_actions(), 3);
  AdaDeltaState sl_opt(p), rl_opt(p);
  REQUIRE(train_sl(p, sl_opt, corpus).reconstructed);

  // An episode that rewards the wrong action at a corpus decision.
  Episode e;
  const auto& step = corpus[0].steps[0];
  std::size_t wrong = 0;
  while (wrong == step.target || !step.mask.allowed(wrong)) ++wrong;
  e.steps.push_back({step.features, step.mask, wrong, 0.5});
  e.reward = 1.0;
  e.ret = 1.0;

  std::size_t repaired = 0;
  for (int i = 0; i < 30; ++i) {
    const auto r = guarded_update(p, rl_opt, sl_opt, e, corpus, 0.0, {50.0, 1e-8});
    CHECK(r.stepped);
    repaired += r.repaired;
    CHECK(reconstructs(p, corpus));
  }
  CHECK(repaired > 0);
}

TEST_CASE("guarded update rolls back when repair fails") {
  const auto& domain = testing::phone_domain();
  const auto& all = testing::phone_data();
  const std::vector<TrainingSequence> corpus(all.begin(), all.begin() + 3);
  auto p = init_model(ModelKind::LSTM, FeatureLayout::of(domain).dim, 16, domain.n_actions(), 3);
  AdaDeltaState sl_opt(p), rl_opt(p);
  REQUIRE(train_sl(p, sl_opt, corpus).reconstructed);
  const auto& step = corpus[0].steps[0];
  std::size_t wrong = 0;
  while (wrong == step.target || !step.mask.allowed(wrong)) ++wrong;
  Episode e;
  e.steps.push_back({step.features, step.mask, wrong, 0.5});
  e.ret = e.reward = 1.0;

  SlOptions no_budget;
  no_budget.max_epochs = 0;
  bool rolled = false;
  for (int i = 0; i < 50 && !rolled; ++i) {
    const auto before = p;
    const auto r = guarded_update(p, rl_opt, sl_opt, e, corpus, 0.0, {50.0, 1e-8}, no_budget);
    if (r.rolled_back) {
      rolled = true;
      CHECK(p == before);
    }
    CHECK(reconstructs(p, corpus));
  }
  CHECK(rolled);
}
