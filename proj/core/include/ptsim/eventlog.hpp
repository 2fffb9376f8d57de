#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptsim/time.hpp"

namespace ptsim {

using ActivitySequence = std::vector<std::string>;

struct Event {
  std::string case_id;
  std::string activity;
  Timestamp start_time;
  Timestamp end_time;
  std::optional<std::string> resource;

  Seconds duration() const { return end_time - start_time; }
  friend bool operator==(const Event&, const Event&) = default;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;

  ActivitySequence activities() const;
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct Variant {
  ActivitySequence sequence;
  std::size_t count = 0;
  friend bool operator==(const Variant&, const Variant&) = default;
};

/// Directly-follows relation with start/end multisets, all keyed by activity.
struct DirectlyFollows {
  std::map<std::pair<std::string, std::string>, std::size_t> edges;
  std::map<std::string, std::size_t> starts;
  std::map<std::string, std::size_t> ends;

  static DirectlyFollows from_variants(const std::vector<Variant>& variants);
  std::size_t edge_total() const;
  friend bool operator==(const DirectlyFollows&, const DirectlyFollows&) = default;
};

/// Immutable event log. Construction validates and normalizes: traces must be
/// non-empty with unique case ids, every event belongs to its trace's case,
/// end >= start, and events are stably sorted by end time.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::vector<Trace> traces);

  const std::vector<Trace>& traces() const { return traces_; }
  const std::set<std::string>& alphabet() const { return alphabet_; }
  const std::set<std::string>& resources() const { return resources_; }
  bool empty() const { return traces_.empty(); }
  std::size_t size() const { return traces_.size(); }
  std::size_t event_count() const;
  /// [min start_time, max end_time]; absent for an empty log.
  std::optional<std::pair<Timestamp, Timestamp>> span() const { return span_; }

  friend bool operator==(const EventLog& a, const EventLog& b) { return a.traces_ == b.traces_; }

 private:
  std::vector<Trace> traces_;
  std::set<std::string> alphabet_;
  std::set<std::string> resources_;
  std::optional<std::pair<Timestamp, Timestamp>> span_;
};

struct ColumnMapping {
  std::string case_id = "case:concept:name";
  std::string activity = "concept:name";
  std::string end_time = "time:timestamp";
  std::optional<std::string> start_time = "start_timestamp";
  std::optional<std::string> resource = "org:resource";
};

inline constexpr const char* kCanonicalHeader =
    "case:concept:name,concept:name,start_timestamp,time:timestamp,org:resource";

/// Reads a comma-separated log. Optional columns named in the mapping but
/// absent from the header are treated as not provided.
EventLog parse_csv(std::istream& in, const ColumnMapping& mapping = {});
EventLog parse_csv_string(const std::string& text, const ColumnMapping& mapping = {});

void write_csv(const EventLog& log, std::ostream& out);
std::string write_csv_string(const EventLog& log);

/// Distinct activity sequences with multiplicities, lexicographic order.
std::vector<Variant> variants(const EventLog& log);

DirectlyFollows dfg(const EventLog& log);

}  // namespace ptsim
