#include "ptsim/params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptsim/error.hpp"

namespace ptsim {
namespace {

using std::chrono::days;
using std::chrono::floor;
using std::chrono::hours;
using std::chrono::sys_days;

constexpr std::int64_t kDay = 86400;

Timestamp day_start(Timestamp t) { return Timestamp{floor<days>(t)}; }

struct Sweep {
  Timestamp at;
  int delta;  // -1 end, +1 start; ends sort first so [s, e) intervals touch without overlap
  bool operator<(const Sweep& o) const { return at != o.at ? at < o.at : delta < o.delta; }
};

int max_overlap(std::vector<Sweep> points) {
  std::sort(points.begin(), points.end());
  int cur = 0, best = 0;
  for (const auto& p : points) {
    cur += p.delta;
    best = std::max(best, cur);
  }
  return best;
}

}  // namespace

std::size_t HandoverMatrix::count(const std::string& from, const std::string& to) const {
  const auto it = counts.find({from, to});
  return it == counts.end() ? 0 : it->second;
}

int weekday_index(Timestamp t) {
  const std::chrono::weekday wd{floor<days>(t)};
  return static_cast<int>((wd.c_encoding() + 6) % 7);
}

Calendar::Calendar(Week week) : week_(std::move(week)) {
  for (std::size_t d = 0; d < week_.size(); ++d) {
    const auto& day = week_[d];
    for (std::size_t i = 0; i < day.size(); ++i) {
      const auto& iv = day[i];
      if (iv.open < 0 || iv.close > 24 || iv.open >= iv.close) {
        throw Error(ErrorCode::InvalidArgument, "calendar interval must satisfy 0 <= open < close <= 24",
                    "day " + std::to_string(d));
      }
      if (i > 0 && day[i - 1].close > iv.open) {
        throw Error(ErrorCode::InvalidArgument, "calendar intervals must be sorted and disjoint",
                    "day " + std::to_string(d));
      }
    }
  }
}

Calendar Calendar::always_open() {
  Week w;
  for (auto& d : w) d = {Interval{0, 24}};
  return Calendar(std::move(w));
}

bool Calendar::any_open() const {
  return std::any_of(week_.begin(), week_.end(), [](const auto& d) { return !d.empty(); });
}

bool Calendar::is_open(Timestamp t) const {
  const std::int64_t sec = (t - day_start(t)).count();
  for (const auto& iv : week_[static_cast<std::size_t>(weekday_index(t))]) {
    if (sec >= iv.open * 3600LL && sec < iv.close * 3600LL) return true;
  }
  return false;
}

std::optional<Timestamp> Calendar::next_open(Timestamp t) const {
  if (is_open(t)) return t;
  const Timestamp base = day_start(t);
  for (int d = 0; d <= 7; ++d) {
    const Timestamp day = base + Seconds{d * kDay};
    for (const auto& iv : week_[static_cast<std::size_t>(weekday_index(day))]) {
      const Timestamp candidate = day + Seconds{iv.open * 3600LL};
      if (candidate > t) return candidate;
    }
  }
  return std::nullopt;
}

std::optional<Timestamp> Calendar::next_close(Timestamp t) const {
  Timestamp cur = t;
  for (int guard = 0; guard < 7 * 24 + 2; ++guard) {
    if (!is_open(cur)) return cur;
    const Timestamp day = day_start(cur);
    const std::int64_t sec = (cur - day).count();
    for (const auto& iv : week_[static_cast<std::size_t>(weekday_index(cur))]) {
      if (sec >= iv.open * 3600LL && sec < iv.close * 3600LL) {
        cur = day + Seconds{iv.close * 3600LL};
        break;
      }
    }
  }
  return std::nullopt;
}

ActivityProfile ParameterSet::profile_for(const std::string& activity) const {
  const auto it = activities.find(activity);
  if (it != activities.end()) return it->second;
  ActivityProfile p;
  p.activity = activity;
  return p;
}

void validate_parameters(const ParameterSet& p) {
  auto fail = [](const std::string& msg, const std::string& where) {
    throw Error(ErrorCode::InvalidArgument, msg, where);
  };
  if (!(p.arrival.mean_interarrival > 0.0) || !std::isfinite(p.arrival.mean_interarrival)) {
    fail("mean interarrival must be positive", "arrival");
  }
  if (!(p.arrival.std_interarrival >= 0.0)) fail("interarrival deviation must be non-negative", "arrival");
  for (const auto& [name, a] : p.activities) {
    if (a.activity != name) fail("profile name differs from its key", name);
    if (!(a.mean_duration >= 0.0) || !std::isfinite(a.mean_duration)) fail("mean duration must be >= 0", name);
    if (!(a.std_duration >= 0.0) || !std::isfinite(a.std_duration)) fail("duration deviation must be >= 0", name);
    if (a.capacity < 1) fail("capacity must be at least 1", name);
    if (!(a.mean_waiting >= 0.0) || !std::isfinite(a.mean_waiting)) fail("mean waiting must be >= 0", name);
  }
  if (p.process_capacity && *p.process_capacity == 0) fail("process capacity must be positive", "process_capacity");
  if (!p.calendar.any_open()) fail("calendar has no open hours", "calendar");
}

Stat sample_stats(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

ArrivalProfile mine_arrival(const EventLog& log) {
  if (log.size() < 2) {
    throw Error(ErrorCode::TooFewCases, "arrival statistics need at least two cases",
                std::to_string(log.size()) + " case(s)");
  }
  std::vector<Timestamp> starts;
  for (const auto& t : log.traces()) {
    Timestamp first = t.events.front().start_time;
    for (const auto& e : t.events) first = std::min(first, e.start_time);
    starts.push_back(first);
  }
  std::sort(starts.begin(), starts.end());
  std::vector<double> gaps;
  for (std::size_t i = 1; i < starts.size(); ++i) gaps.push_back(static_cast<double>((starts[i] - starts[i - 1]).count()));
  const Stat s = sample_stats(gaps);
  ArrivalProfile a;
  a.mean_interarrival = s.mean > 0.0 ? s.mean : 1.0;
  a.std_interarrival = s.std;
  a.kind = ArrivalKind::Exponential;
  return a;
}

DurationStats mine_durations(const EventLog& log) {
  std::map<std::string, std::vector<double>> samples;
  bool all_instant = !log.empty();
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      samples[e.activity].push_back(static_cast<double>(e.duration().count()));
      all_instant = all_instant && e.start_time == e.end_time;
    }
  }
  DurationStats out;
  out.single_timestamp = all_instant;
  for (const auto& [a, v] : samples) out.per_activity[a] = sample_stats(v);
  return out;
}

std::map<std::string, int> mine_capacity(const EventLog& log) {
  std::map<std::string, std::vector<Sweep>> points;
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      auto& p = points[e.activity];
      if (e.start_time < e.end_time) {
        p.push_back({e.start_time, +1});
        p.push_back({e.end_time, -1});
      }
    }
  }
  std::map<std::string, int> out;
  for (const auto& a : log.alphabet()) out[a] = std::max(1, max_overlap(points[a]));
  return out;
}

std::pair<std::map<std::string, std::set<std::string>>, HandoverMatrix> mine_resources_and_handover(
    const EventLog& log) {
  std::map<std::string, std::set<std::string>> sets;
  HandoverMatrix handover;
  for (const auto& a : log.alphabet()) sets[a];
  for (const auto& t : log.traces()) {
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      const auto& e = t.events[i];
      if (e.resource) sets[e.activity].insert(*e.resource);
      if (i + 1 < t.events.size() && e.resource && t.events[i + 1].resource) {
        ++handover.counts[{*e.resource, *t.events[i + 1].resource}];
      }
    }
  }
  return {std::move(sets), std::move(handover)};
}

Calendar mine_calendar(const EventLog& log) {
  std::array<std::optional<std::pair<double, double>>, 7> seen;  // hour range per weekday
  auto mark = [&](Timestamp day, double lo, double hi) {
    auto& s = seen[static_cast<std::size_t>(weekday_index(day))];
    if (!s) {
      s = std::make_pair(lo, hi);
    } else {
      s->first = std::min(s->first, lo);
      s->second = std::max(s->second, hi);
    }
  };
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      if (e.start_time == e.end_time) {
        const Timestamp d = day_start(e.start_time);
        // An instantaneous event needs its whole hour open.
        const double h = std::floor(static_cast<double>((e.start_time - d).count()) / 3600.0);
        mark(d, h, h + 1.0);
        continue;
      }
      Timestamp cur = e.start_time;
      while (cur < e.end_time) {
        const Timestamp d = day_start(cur);
        const Timestamp seg_end = std::min(e.end_time, d + Seconds{kDay});
        mark(d, static_cast<double>((cur - d).count()) / 3600.0, static_cast<double>((seg_end - d).count()) / 3600.0);
        cur = seg_end;
      }
    }
  }
  Calendar::Week week;
  for (std::size_t d = 0; d < 7; ++d) {
    if (!seen[d]) continue;
    const int open = static_cast<int>(std::floor(seen[d]->first));
    int close = static_cast<int>(std::ceil(seen[d]->second));
    if (close <= open) close = open + 1;
    week[d].push_back(Calendar::Interval{open, std::min(close, 24)});
  }
  return Calendar(std::move(week));
}

std::map<std::string, double> mine_waiting(const EventLog& log) {
  std::map<std::string, std::vector<double>> samples;
  for (const auto& t : log.traces()) {
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      const auto& e = t.events[i];
      double w = 0.0;
      if (i > 0) w = std::max<double>(0.0, static_cast<double>((e.start_time - t.events[i - 1].end_time).count()));
      samples[e.activity].push_back(w);
    }
  }
  std::map<std::string, double> out;
  for (const auto& [a, v] : samples) out[a] = sample_stats(v).mean;
  return out;
}

ProcessCapacityStats mine_process_capacity(const EventLog& log) {
  ProcessCapacityStats out;
  if (log.empty()) {
    out.empty_log = true;
    return out;
  }
  std::vector<Sweep> points;
  for (const auto& t : log.traces()) {
    Timestamp lo = t.events.front().start_time, hi = t.events.front().end_time;
    for (const auto& e : t.events) {
      lo = std::min(lo, e.start_time);
      hi = std::max(hi, e.end_time);
    }
    if (lo < hi) {
      points.push_back({lo, +1});
      points.push_back({hi, -1});
    }
  }
  out.capacity = static_cast<std::size_t>(std::max(1, max_overlap(std::move(points))));
  return out;
}

MinedParameters mine_parameters(const EventLog& log) {
  MinedParameters out;
  ParameterSet& p = out.params;
  if (log.size() >= 2) {
    p.arrival = mine_arrival(log);
  } else {
    out.warnings.push_back("fewer than two cases: arrival profile left at its default");
  }
  const auto durations = mine_durations(log);
  if (durations.single_timestamp) {
    out.warnings.push_back("log has a single timestamp per event: durations are zero, capacities 1");
  }
  const auto capacity = mine_capacity(log);
  auto [resources, handover] = mine_resources_and_handover(log);
  const auto waiting = mine_waiting(log);
  for (const auto& a : log.alphabet()) {
    ActivityProfile prof;
    prof.activity = a;
    prof.mean_duration = durations.per_activity.at(a).mean;
    prof.std_duration = durations.per_activity.at(a).std;
    prof.capacity = capacity.at(a);
    prof.resources = resources[a];
    prof.mean_waiting = waiting.at(a);
    p.activities.emplace(a, std::move(prof));
  }
  p.handover = std::move(handover);
  p.calendar = mine_calendar(log);
  if (!p.calendar.any_open()) p.calendar = Calendar::always_open();
  const auto cap = mine_process_capacity(log);
  if (cap.empty_log) {
    out.warnings.push_back("empty log: process capacity left unbounded");
  } else {
    p.process_capacity = cap.capacity;
  }
  return out;
}

}  // namespace ptsim
