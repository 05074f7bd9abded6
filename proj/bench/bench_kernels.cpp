// Serial reference kernels against their OpenMP counterparts on a synthetic
// 2x2 dataset. Run with OMP_NUM_THREADS set to compare scaling.
#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "fhmm/gibbs.hpp"
#include "fhmm/synthgen.hpp"

namespace {

struct Fixture {
  fhmm::PreparedData data;
  fhmm::JointStateSpace space{2, 2};
  fhmm::ModelState state;
  std::vector<std::size_t> all_steps;

  explicit Fixture(int D) {
    auto config = fhmm::GeneratorConfig::two_by_two();
    config.D = D;
    config.seed = 7;
    auto gen = fhmm::generate_dataset(config);
    data = fhmm::PreparedData::from_dataset(fhmm::fit_standardizer(std::move(gen.dataset)));
    fhmm::Rng rng(11);
    state = fhmm::initialize_state(data, space, fhmm::Hyperparams{}, rng);
    all_steps.resize(data.total_steps());
    std::iota(all_steps.begin(), all_steps.end(), std::size_t{0});
  }
};

const Fixture& fixture(int D) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(D);
  if (it == cache.end()) it = cache.emplace(D, Fixture(D)).first;
  return it->second;
}

void BM_Smoothing(benchmark::State& st, fhmm::Exec exec) {
  const auto& f = fixture(static_cast<int>(st.range(0)));
  const fhmm::Rng base(3);
  for (auto _ : st) {
    auto batch = fhmm::kernels::smooth_and_sample(exec, f.data, f.state.params, f.space,
                                                  fhmm::LatentSampling::Marginal, base);
    benchmark::DoNotOptimize(batch.log_marginals.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.data.total_steps()));
}

void BM_RegimeLikelihood(benchmark::State& st, fhmm::Exec exec) {
  const auto& f = fixture(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    double ll = fhmm::kernels::regime_log_likelihood(exec, f.data, f.all_steps, f.state.params.theta[0],
                                                     f.state.params.sigma2[0]);
    benchmark::DoNotOptimize(ll);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.all_steps.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Smoothing, serial, fhmm::Exec::Serial)->Arg(20)->Arg(100);
BENCHMARK_CAPTURE(BM_Smoothing, parallel, fhmm::Exec::Parallel)->Arg(20)->Arg(100);
BENCHMARK_CAPTURE(BM_RegimeLikelihood, serial, fhmm::Exec::Serial)->Arg(20)->Arg(100);
BENCHMARK_CAPTURE(BM_RegimeLikelihood, parallel, fhmm::Exec::Parallel)->Arg(20)->Arg(100);

BENCHMARK_MAIN();
