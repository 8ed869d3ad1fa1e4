// Serial reference vs OpenMP versions of the experiment kernels.

#include <benchmark/benchmark.h>

#include "dialogctl/phone/experiments.hpp"
#include "dialogctl/rl_trainer.hpp"
#include "dialogctl/sl_trainer.hpp"

using namespace dialogctl;

namespace {

struct Fixture {
  phone::PhoneDomain domain{phone::AddressBook::load(DIALOGCTL_DATA_DIR "/addressbook.json")};
  std::vector<TrainingSequence> data =
      featurize(load_corpus(DIALOGCTL_DATA_DIR "/phone_corpus.dlg"), domain);
  ModelParams trained;
  BaselineBuffer buffer{100};

  Fixture() {
    const auto layout = FeatureLayout::of(domain);
    trained = init_model(ModelKind::LSTM, layout.dim, 32, domain.n_actions(), 1);
    train_sl(trained, data);
    // Episodes sampled from the trained policy fill the baseline buffer.
    auto shared = std::make_shared<const ModelParams>(trained);
    for (std::uint64_t i = 0; i < 100; ++i) {
      NeuralPolicy policy(shared);
      const auto d = phone::simulate_dialog(domain, policy, phone::SimParams{}, i,
                                            SelectionMode::Sample);
      auto ep = Episode::from_records(d.result.records, d.result.success ? 1.0 : 0.0);
      if (!ep.steps.empty()) buffer.push(std::move(ep));
    }
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_Baseline(benchmark::State& state, bool parallel) {
  auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? estimate_baseline(f.buffer, f.trained)
                                      : estimate_baseline_serial(f.buffer, f.trained));
}

void BM_Tcr(benchmark::State& state, bool parallel) {
  auto& f = fixture();
  const phone::EvalOptions eval{200, 20, 3};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        parallel ? phone::evaluate_tcr(f.domain, f.trained, phone::SimParams{}, eval)
                 : phone::evaluate_tcr_serial(f.domain, f.trained, phone::SimParams{}, eval));
}

void BM_Loo(benchmark::State& state, bool parallel) {
  auto& f = fixture();
  LooOptions o;
  o.train_sizes = {2};
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? loo_eval(f.data, o) : loo_eval_serial(f.data, o));
}

void BM_Roc(benchmark::State& state, bool parallel) {
  auto& f = fixture();
  RocOptions o;
  o.repeats = 4;
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? roc_data(f.data, o) : roc_data_serial(f.data, o));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Baseline, serial, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Baseline, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Tcr, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Tcr, parallel, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Loo, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Loo, parallel, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Roc, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Roc, parallel, true)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
