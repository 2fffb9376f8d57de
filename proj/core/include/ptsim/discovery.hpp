#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ptsim/eventlog.hpp"
#include "ptsim/ptree.hpp"

namespace ptsim {

/// Inductive-miner style discovery. Cuts are tried in the order xor,
/// sequence, parallel, loop; a log that admits none becomes the flower model
/// *(tau, a1, ..., an). The result replays every trace of the input.
/// Throws EmptyLog.
ProcessTree discover_tree(const EventLog& log);
Node discover_node(const std::vector<Variant>& variants);

struct AnnotationReport {
  ProcessTree tree;
  std::size_t replayed_traces = 0;
  std::size_t skipped_traces = 0;
  /// Xor nodes no replayed trace passed through; they carry uniform weights.
  std::vector<NodeId> unobserved_xors;
  /// Loop nodes no replayed trace passed through; existing annotations are
  /// kept, otherwise max_redo = 1 and p_redo = 0.5.
  std::vector<NodeId> unobserved_loops;
};

/// Replays the log on the tree and attaches xor branch frequencies, loop
/// bounds (max observed redo count, share of executions that redo at least
/// once) and the maximum observed trace length. Structure is never changed.
/// Throws NoReplayableTraces when no trace fits the tree.
AnnotationReport annotate_with_report(const ProcessTree& tree, const EventLog& log);
ProcessTree annotate(const ProcessTree& tree, const EventLog& log);

/// True when `sequence` is a visible run of `tree`, loops taken as unbounded.
bool replays(const ProcessTree& tree, const ActivitySequence& sequence);

}  // namespace ptsim
