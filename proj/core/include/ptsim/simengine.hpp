#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptsim/eventlog.hpp"
#include "ptsim/params.hpp"
#include "ptsim/ptree.hpp"
#include "ptsim/rng.hpp"

namespace ptsim {

/// Absolute [from, to) window during which no activity may start.
struct ProcessPause {
  Timestamp from;
  Timestamp to;
};

struct SimConfig {
  std::size_t num_cases = 1;
  Timestamp start_time{};
  std::uint64_t seed = 0;
  /// Running activities pause at calendar close and resume at the next
  /// opening with their remaining duration.
  bool interrupt_activity = false;
  /// Cases open at calendar close freeze their pending post-enablement
  /// delays until the next opening.
  bool interrupt_case = false;
  std::vector<ProcessPause> interrupt_process;
  std::optional<std::size_t> process_capacity_override;
  std::optional<Calendar> calendar_override;
  std::optional<ArrivalProfile> arrival_override;
};

// Activity starts happen inline when a ready instance is dispatched, so they
// have no queue entry of their own.
enum class SimEventKind {
  CaseArrival,
  ActivityReady,
  ActivityComplete,
  ActivityPause,
  Resume,
  Wakeup,
  CalendarClose,
  ProcessPauseBegin,
};

/// Queue entry. Pops in (time, seq) order; seq is assigned at scheduling.
struct SimEvent {
  Timestamp time;
  std::uint64_t seq = 0;
  SimEventKind kind = SimEventKind::Wakeup;
  std::size_t case_index = 0;
  std::size_t instance = 0;  // instance or pause-window index
  std::uint64_t generation = 0;

  bool operator>(const SimEvent& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

enum class InterruptionKind { Activity, Case, Process };
std::string_view to_string(InterruptionKind kind);

struct InterruptionRecord {
  std::string case_id;   // empty for process windows
  std::string activity;  // empty for case and process records
  InterruptionKind kind = InterruptionKind::Activity;
  Timestamp paused_at;
  Timestamp resumed_at;
  friend bool operator==(const InterruptionRecord&, const InterruptionRecord&) = default;
};

/// One activity execution as the engine saw it, including the exact
/// enablement instant and the assigned resource.
struct ExecutionRecord {
  std::string case_id;
  std::string activity;
  std::string resource;  // kSystemResource when no real resource was used
  Timestamp enabled;
  Timestamp started;
  Timestamp completed;
  std::int64_t service_seconds = 0;
};

struct CaseRecord {
  std::string case_id;
  Timestamp arrival;
  Timestamp admitted;  // later than arrival when the process capacity was full
  Timestamp completion;
  std::size_t events = 0;
  bool truncated = false;
};

struct ActivityKpi {
  std::size_t executions = 0;
  double mean_waiting = 0.0;
  double max_waiting = 0.0;
  double mean_service = 0.0;
  double mean_queue_length = 0.0;  // time-weighted over the run
  std::size_t max_queue_length = 0;
};

struct CaseKpi {
  std::string case_id;
  double sojourn = 0.0;
  double waiting = 0.0;  // summed over the case's executions
};

struct KpiReport {
  bool empty = true;
  std::map<std::string, ActivityKpi> activities;
  std::vector<CaseKpi> cases;
  double mean_sojourn = 0.0;
  double max_sojourn = 0.0;
};

struct SimResult {
  EventLog log;
  KpiReport kpis;
  std::vector<InterruptionRecord> interruptions;
  std::vector<ExecutionRecord> executions;
  std::vector<CaseRecord> cases;
  std::size_t truncated_cases = 0;
  /// Cases whose path produced no visible event; they cannot appear in a log.
  std::size_t empty_cases = 0;
};

/// Normal(mean, std) redrawn up to 100 times while negative, then clamped at
/// 0. A zero deviation returns the mean without drawing.
double sample_duration(const ActivityProfile& profile, Rng& rng);

/// Picks from the activity's resources, weighted by handover counts from
/// `last`; uniform without history or when every weight is 0; `system` when
/// the activity has no resources.
std::string next_resource(const ActivityProfile& profile, const HandoverMatrix& handover,
                          const std::optional<std::string>& last, Rng& rng);

KpiReport kpi_summary(const std::vector<ExecutionRecord>& executions, const std::vector<CaseRecord>& cases,
                      Timestamp horizon_start, Timestamp horizon_end);

/// Runs one seeded simulation. Throws InvalidArgument for bad inputs,
/// UnboundedLoop for a loop with p_redo = 1 and no max_redo, and
/// DeadlockDetected when work remains but nothing can ever be scheduled.
///
/// Random draws happen as events are processed: the next interarrival when
/// a case arrives, xor branches and loop decisions when the tree is walked,
/// then duration and resource when an activity becomes ready.
SimResult simulate(const ProcessTree& tree, const ParameterSet& params, const SimConfig& config);

/// Sidecar CSV: `case_id,activity,kind,paused_at,resumed_at`.
void write_interruptions_csv(const std::vector<InterruptionRecord>& records, std::ostream& out);

}  // namespace ptsim
