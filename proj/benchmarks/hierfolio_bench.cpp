#include <benchmark/benchmark.h>

#include <memory>

#include "hierfolio/features.hpp"
#include "hierfolio/hierarchy.hpp"
#include "hierfolio/market.hpp"
#include "hierfolio/neural.hpp"
#include "hierfolio/portfolio_env.hpp"
#include "hierfolio/sentiment.hpp"
#include "hierfolio/synthetic.hpp"

using namespace hierfolio;

namespace {

const PriceTable& universe() {
  static const PriceTable t = fill_missing(synthetic_universe(), {});
  return t;
}

std::shared_ptr<const MarketData> market() {
  static const auto m = [] {
    const auto months = month_range({2003, 1}, {2024, 12});
    const auto sent = simulate_sentiment(universe(), months, 1, 0.0);
    return std::make_shared<const MarketData>(build_market(universe(), &sent));
  }();
  return m;
}

void BM_Forward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto net = Mlp3::initialized(266, hidden, hidden, 14, OutputHead::softmax, rng);
  const Vec x = Vec::Constant(266, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Arg(128);

void BM_Backward(benchmark::State& state) {
  const auto batch_rows = state.range(0);
  Rng rng(2);
  const auto net = Mlp3::initialized(266, 64, 64, 14, OutputHead::softmax, rng);
  TrainBatch batch{Mat::Random(batch_rows, 266), Mat::Constant(batch_rows, 14, 1.0 / 14)};
  for (auto _ : state) benchmark::DoNotOptimize(backward(net, batch));
}
BENCHMARK(BM_Backward)->Arg(1)->Arg(32);

void BM_MonthlyFeatures(benchmark::State& state) {
  const auto slices = monthly_partition(universe());
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& s = slices[k++ % slices.size()];
    benchmark::DoNotOptimize(compute_monthly_metrics(s));
    benchmark::DoNotOptimize(correlation_matrix(s));
  }
}
BENCHMARK(BM_MonthlyFeatures);

void BM_BuildMarket(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_market(universe(), nullptr));
}
BENCHMARK(BM_BuildMarket)->Unit(benchmark::kMillisecond);

void BM_EnvEpisode(benchmark::State& state) {
  PortfolioEnv env(market(), Window::parse("2003-01:2017-12"), ObservationMode::metrics, {});
  const auto w = PortfolioWeights::uniform(14);
  for (auto _ : state) {
    auto s = env.reset();
    for (;;) {
      auto out = env.step(s, w);
      if (out.done) break;
      s = std::move(out.next);
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(env.episode_length()));
}
BENCHMARK(BM_EnvEpisode)->Unit(benchmark::kMillisecond);

void BM_LookaheadLabels(benchmark::State& state) {
  const auto m = market();
  std::vector<Contributor> cs;
  for (std::size_t a = 0; a < 14; ++a) {
    const auto w = PortfolioWeights::unit(14, a);
    cs.push_back({{"unit" + std::to_string(a), ""}, [w](std::size_t) { return w; }});
  }
  const auto range = decision_range(*m, Window::parse("2003-01:2017-12"));
  const auto panels = build_panels(cs, *m, range);
  for (auto _ : state) benchmark::DoNotOptimize(collect_imitation_dataset(panels, *m, {}, 3, range.last));
}
BENCHMARK(BM_LookaheadLabels)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
