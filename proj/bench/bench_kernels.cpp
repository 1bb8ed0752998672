// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "emgo/evaluation.hpp"
#include "emgo/features.hpp"
#include "emgo/filter.hpp"
#include "emgo/synth.hpp"

using namespace emgo;

namespace {

const SynthConfig& config() {
  static const SynthConfig cfg = [] {
    SynthConfig c = default_synth_config();
    c.n_subjects = 1;
    return c;
  }();
  return cfg;
}

const Recording& trial() {
  static const Recording r = generate_trial(config(), {1, Gesture::HC, Orientation::Rest, 1});
  return r;
}

const std::vector<Window>& windows() {
  static const std::vector<Window> w = [] {
    const Dataset ds = generate_dataset(config());
    return windowize(ds, 1, ElectrodePosition::Forearm, {}).windows;
  }();
  return w;
}

void BM_Preprocess(benchmark::State& state) {
  const Recording& r = trial();
  for (auto _ : state) benchmark::DoNotOptimize(preprocess(r, FilterSpec{}));
}

void BM_PreprocessSerial(benchmark::State& state) {
  const Recording& r = trial();
  for (auto _ : state) benchmark::DoNotOptimize(preprocess_serial(r, FilterSpec{}));
}

void BM_ExtractBatch(benchmark::State& state) {
  const auto m = static_cast<FeatureMethod>(state.range(0));
  const auto& w = windows();
  for (auto _ : state) benchmark::DoNotOptimize(extract_batch(m, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(windows().size()));
  state.SetLabel(std::string(to_string(m)));
}

void BM_ExtractBatchSerial(benchmark::State& state) {
  const auto m = static_cast<FeatureMethod>(state.range(0));
  const auto& w = windows();
  for (auto _ : state) benchmark::DoNotOptimize(extract_batch_serial(m, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(windows().size()));
  state.SetLabel(std::string(to_string(m)));
}

}  // namespace

BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PreprocessSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractBatch)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractBatchSerial)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
