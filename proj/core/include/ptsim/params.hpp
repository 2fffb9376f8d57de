#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptsim/eventlog.hpp"

namespace ptsim {

inline constexpr const char* kSystemResource = "system";

enum class ArrivalKind { Exponential, NormalClamped };

struct ArrivalProfile {
  double mean_interarrival = 3600.0;  // seconds, > 0
  double std_interarrival = 0.0;
  ArrivalKind kind = ArrivalKind::Exponential;
  friend bool operator==(const ArrivalProfile&, const ArrivalProfile&) = default;
};

struct ActivityProfile {
  std::string activity;
  double mean_duration = 0.0;
  double std_duration = 0.0;
  int capacity = 1;
  std::set<std::string> resources;  // empty: the synthetic `system` resource
  double mean_waiting = 0.0;
  friend bool operator==(const ActivityProfile&, const ActivityProfile&) = default;
};

struct HandoverMatrix {
  std::map<std::pair<std::string, std::string>, std::size_t> counts;

  std::size_t count(const std::string& from, const std::string& to) const;
  friend bool operator==(const HandoverMatrix&, const HandoverMatrix&) = default;
};

/// Weekly business hours. Day 0 is Monday. Each day holds sorted, disjoint
/// [open, close) hour intervals with 0 <= open < close <= 24; a day without
/// intervals is closed. Wall-clock hours are read in UTC.
class Calendar {
 public:
  struct Interval {
    int open = 0;
    int close = 24;
    friend bool operator==(const Interval&, const Interval&) = default;
  };
  using Week = std::array<std::vector<Interval>, 7>;

  Calendar() = default;
  explicit Calendar(Week week);
  static Calendar always_open();
  static Calendar closed() { return Calendar{}; }

  const Week& week() const { return week_; }
  bool any_open() const;
  bool is_open(Timestamp t) const;
  /// `t` itself when open, otherwise the next opening instant.
  std::optional<Timestamp> next_open(Timestamp t) const;
  /// End of the contiguous open stretch containing `t` (which must be open);
  /// absent when the calendar never closes from `t` on.
  std::optional<Timestamp> next_close(Timestamp t) const;

  friend bool operator==(const Calendar&, const Calendar&) = default;

 private:
  Week week_{};
};

/// Monday-based weekday index (0..6) of a UTC instant.
int weekday_index(Timestamp t);

struct ParameterSet {
  ArrivalProfile arrival;
  std::map<std::string, ActivityProfile> activities;
  HandoverMatrix handover;
  Calendar calendar = Calendar::always_open();
  std::optional<std::size_t> process_capacity;  // absent = unbounded

  /// The profile for `activity`, or a zero-duration, capacity-1 default.
  ActivityProfile profile_for(const std::string& activity) const;
  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

/// Throws InvalidArgument naming the first broken invariant.
void validate_parameters(const ParameterSet& params);

struct Stat {
  double mean = 0.0;
  double std = 0.0;
  friend bool operator==(const Stat&, const Stat&) = default;
};

/// Sample mean and n-1 standard deviation (0 for a single value).
Stat sample_stats(const std::vector<double>& values);

struct DurationStats {
  std::map<std::string, Stat> per_activity;
  bool single_timestamp = false;
};

struct ProcessCapacityStats {
  std::size_t capacity = 0;
  bool empty_log = false;
};

ArrivalProfile mine_arrival(const EventLog& log);
DurationStats mine_durations(const EventLog& log);
std::map<std::string, int> mine_capacity(const EventLog& log);
std::pair<std::map<std::string, std::set<std::string>>, HandoverMatrix> mine_resources_and_handover(
    const EventLog& log);
Calendar mine_calendar(const EventLog& log);
std::map<std::string, double> mine_waiting(const EventLog& log);
ProcessCapacityStats mine_process_capacity(const EventLog& log);

struct MinedParameters {
  ParameterSet params;
  std::vector<std::string> warnings;
};

/// Every parameter at once. Logs with fewer than two cases keep the default
/// arrival profile and report a warning.
MinedParameters mine_parameters(const EventLog& log);

}  // namespace ptsim
