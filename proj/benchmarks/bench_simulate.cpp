#include <benchmark/benchmark.h>

#include <fstream>

#include <ptsim/ptree.hpp>

#include <ptsim/discovery.hpp>
#include <ptsim/params.hpp>
#include <ptsim/simengine.hpp>

namespace {

void BM_Simulate(benchmark::State& state) {
  std::ifstream in(std::string(PTSIM_DATA_DIR) + "/claims.csv");
  const auto log = ptsim::parse_csv(in);
  const auto tree = ptsim::annotate(ptsim::discover_tree(log), log);
  const auto params = ptsim::mine_parameters(log).params;
  ptsim::SimConfig c;
  c.num_cases = static_cast<std::size_t>(state.range(0));
  c.seed = 1;
  c.start_time = log.span()->first;
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::simulate(tree, params, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SimulateWithInterruptions(benchmark::State& state) {
  const auto tree = ptsim::parse_tree("->(a, +(b, c), *(d, e){max_redo=2, p_redo=0.3})");
  ptsim::ParameterSet p;
  for (const char* a : {"a", "b", "c", "d", "e"}) p.activities[a] = {a, 1800, 600, 2, {"r1", "r2", "r3"}, 0};
  p.arrival = {3600, 0, ptsim::ArrivalKind::Exponential};
  ptsim::Calendar::Week w;
  for (std::size_t d = 0; d < 5; ++d) w[d] = {ptsim::Calendar::Interval{9, 17}};
  p.calendar = ptsim::Calendar(w);
  ptsim::SimConfig c;
  c.num_cases = 2000;
  c.seed = 3;
  c.interrupt_activity = true;
  c.interrupt_case = true;
  for (auto _ : state) benchmark::DoNotOptimize(ptsim::simulate(tree, p, c));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_SimulateWithInterruptions)->Unit(benchmark::kMillisecond);

}  // namespace
