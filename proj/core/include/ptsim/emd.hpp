#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ptsim/eventlog.hpp"

namespace ptsim {

std::size_t levenshtein(const ActivitySequence& a, const ActivitySequence& b);

/// Levenshtein distance over activities divided by the longer length; 0 for
/// two empty sequences.
double trace_distance(const ActivitySequence& a, const ActivitySequence& b);

struct EmdFlow {
  std::size_t from = 0;  // index into variants1
  std::size_t to = 0;    // index into variants2
  double mass = 0.0;
  double cost = 0.0;
};

struct EmdReport {
  double distance = 0.0;
  std::vector<Variant> variants1;
  std::vector<Variant> variants2;
  std::vector<std::vector<double>> ground_costs;
  std::vector<EmdFlow> flow;  // non-zero entries only, row-major order
};

/// Exact optimum of a balanced transportation problem with integer supplies
/// and demands (successive shortest paths with potentials).
struct TransportPlan {
  std::vector<std::vector<std::int64_t>> flow;
  double cost = 0.0;
};
TransportPlan solve_transport(const std::vector<std::int64_t>& supply, const std::vector<std::int64_t>& demand,
                              const std::vector<std::vector<double>>& cost);

/// Earth mover's distance between the variant distributions of two logs.
/// Supplies are cross-scaled to integers (count1 * N2 against count2 * N1) so
/// the optimum is exact before normalization. Throws EmptyLog.
EmdReport emd(const EventLog& log1, const EventLog& log2);
EmdReport emd(const std::vector<Variant>& variants1, const std::vector<Variant>& variants2);

}  // namespace ptsim
