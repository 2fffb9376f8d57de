#include <benchmark/benchmark.h>

#include <random>
#include <set>

#include <ptsim/emd.hpp>

namespace {

std::vector<ptsim::Variant> variants(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::set<ptsim::ActivitySequence> seen;
  while (seen.size() < count) {
    ptsim::ActivitySequence s(3 + gen() % 10);
    for (auto& a : s) a = std::string(1, static_cast<char>('a' + gen() % 8));
    seen.insert(s);
  }
  std::vector<ptsim::Variant> out;
  for (const auto& s : seen) out.push_back({s, 1 + gen() % 50});
  return out;
}

void BM_TraceDistance(benchmark::State& state) {
  const auto v = variants(2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::trace_distance(v[0].sequence, v[1].sequence));
}
BENCHMARK(BM_TraceDistance);

void BM_Emd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = variants(n, 7), b = variants(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::emd(a, b));
}
BENCHMARK(BM_Emd)->Arg(10)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
