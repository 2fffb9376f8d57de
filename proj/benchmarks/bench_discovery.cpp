#include <benchmark/benchmark.h>

#include <fstream>

#include <ptsim/discovery.hpp>
#include <ptsim/params.hpp>

namespace {

ptsim::EventLog load(const std::string& name) {
  std::ifstream in(std::string(PTSIM_DATA_DIR) + "/" + name);
  return ptsim::parse_csv(in);
}

void BM_ParseCsv(benchmark::State& state) {
  std::ifstream in(std::string(PTSIM_DATA_DIR) + "/claims.csv");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::parse_csv_string(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseCsv);

void BM_DiscoverAndAnnotate(benchmark::State& state) {
  const auto log = load("claims.csv");
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::annotate(ptsim::discover_tree(log), log));
}
BENCHMARK(BM_DiscoverAndAnnotate);

void BM_MineParameters(benchmark::State& state) {
  const auto log = load("order.csv");
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::mine_parameters(log));
}
BENCHMARK(BM_MineParameters);

}  // namespace
