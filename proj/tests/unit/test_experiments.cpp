#include <doctest.h>

#include "dialogctl/phone/experiments.hpp"
#include "dialogctl/phone/scripted_policy.hpp"
#include "support.hpp"

using namespace dialogctl;
using namespace dialogctl::phone;

namespace {

RlOptions small_rl() {
  RlOptions o;
  o.n_sl = 2;
  o.n_rl_dialogs = 40;
  o.eval_every = 20;
  o.eval_dialogs = 20;
  o.hidden_dim = 8;
  o.sl.max_epochs = 300;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("TCR parallel equals serial") {
  const auto& d = testing::phone_domain();
  auto p = init_model(ModelKind::LSTM, FeatureLayout::of(d).dim, 8, d.n_actions(), 1);
  train_sl(p, testing::phone_data(), {100, StopRule::Reconstruction, 100, 1e-4, 0});
  const EvalOptions e{120, 20, 4};
  const auto a = evaluate_tcr(d, p, SimParams{}, e);
  const auto b = evaluate_tcr_serial(d, p, SimParams{}, e);
  CHECK(a == b);
  CHECK(a.dialogs == 120);
  CHECK(a.tcr == doctest::Approx(double(a.successes) / 120.0));
}

TEST_CASE("TCR of a model that has learned the whole corpus") {
  const auto& d = testing::phone_domain();
  auto p = init_model(ModelKind::LSTM, FeatureLayout::of(d).dim, 32, d.n_actions(), 1);
  REQUIRE(train_sl(p, testing::phone_data()).reconstructed);
  const auto benign = evaluate_tcr(d, p, SimParams::benign(), {200, 20, 0});
  const auto noisy = evaluate_tcr(d, p, SimParams{}, {200, 20, 0});
  CHECK(benign.tcr > 0.9);
  CHECK(noisy.tcr < benign.tcr);
}

TEST_CASE("scripted policy outperforms an untrained model") {
  const auto& d = testing::phone_domain();
  const auto scripted = evaluate_policy(
      d, [&] { return std::make_unique<ScriptedPhonePolicy>(d); }, SimParams{}, {300, 20, 2});
  const auto p = init_model(ModelKind::LSTM, FeatureLayout::of(d).dim, 8, d.n_actions(), 1);
  const auto untrained = evaluate_tcr(d, p, SimParams{}, {300, 20, 2});
  CHECK(scripted.tcr > untrained.tcr);
}

TEST_CASE("RL run is deterministic and keeps its pre-training dialogs") {
  const auto& d = testing::phone_domain();
  const auto o = small_rl();
  std::size_t calls = 0;
  bool always = true;
  const auto a = rl_run(d, testing::phone_data(), SimParams{}, o, 0,
                        [&](std::size_t, const ModelParams& m,
                            const std::vector<TrainingSequence>& corpus) {
                          ++calls;
                          always = always && reconstructs(m, corpus);
                        });
  const auto b = rl_run(d, testing::phone_data(), SimParams{}, o, 0);
  CHECK(a.tcr == b.tcr);
  CHECK(a.checkpoints == b.checkpoints);
  CHECK(a.sl_dialogs == b.sl_dialogs);
  CHECK(a.sl_dialogs.size() == 2);
  CHECK(a.checkpoints == std::vector<std::size_t>{0, 20, 40});
  CHECK(calls > 0);
  CHECK(always);
  CHECK(a.always_reconstructed);
}

TEST_CASE("RL run argument checks") {
  const auto& d = testing::phone_domain();
  auto o = small_rl();
  o.n_sl = 1000;
  CHECK_THROWS(rl_run(d, testing::phone_data(), SimParams{}, o, 0));
  o = small_rl();
  o.eval_every = 0;
  CHECK_THROWS(rl_run(d, testing::phone_data(), SimParams{}, o, 0));
}

TEST_CASE("RL experiment parallel equals serial") {
  const auto& d = testing::phone_domain();
  auto o = small_rl();
  o.n_rl_dialogs = 20;
  const auto a = rl_experiment(d, testing::phone_data(), SimParams{}, o, 2);
  const auto b = rl_experiment_serial(d, testing::phone_data(), SimParams{}, o, 2);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  CHECK(a.checkpoints == b.checkpoints);
}

TEST_CASE("aggregate_runs uses the population standard deviation") {
  RlRun r1, r2;
  r1.checkpoints = r2.checkpoints = {0, 10};
  r1.tcr = {0.2, 0.4};
  r2.tcr = {0.4, 0.8};
  const auto c = aggregate_runs({r1, r2}, 5);
  CHECK(c.n_sl == 5);
  CHECK(c.mean[0] == doctest::Approx(0.3));
  CHECK(c.mean[1] == doctest::Approx(0.6));
  CHECK(c.stddev[0] == doctest::Approx(0.1));
  CHECK(c.stddev[1] == doctest::Approx(0.2));
}
