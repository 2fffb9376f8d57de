#include "ptsim/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>

#include "ptsim/error.hpp"

namespace ptsim {
namespace {

constexpr double kDefaultRedoProbability = 0.5;
constexpr int kMaxNegativeRedraws = 100;

struct Frame {
  const Node* node = nullptr;
  int parent = -1;
  std::size_t child_index = 0;  // position below the parent
  std::size_t current = 0;      // sequence: running child
  std::size_t pending = 0;      // parallel: children not yet done
  int redo_count = 0;
  bool in_redo = false;
  std::vector<int> active;
};

enum class InstanceState { Delaying, Ready, Running, Paused, Done };

struct Instance {
  std::size_t case_index = 0;
  int frame = 0;
  const ActivityProfile* profile = nullptr;
  Timestamp enabled;
  Timestamp ready_at;
  Timestamp started;
  Timestamp last_resume;
  std::int64_t duration = 0;
  std::int64_t remaining = 0;
  std::string resource;
  InstanceState state = InstanceState::Delaying;
  std::uint64_t generation = 0;
};

struct CaseState {
  std::string id;
  Timestamp arrival;
  Timestamp admitted_at;
  Timestamp completion;
  bool admitted = false;
  bool done = false;
  bool truncated = false;
  std::vector<Frame> frames;
  std::size_t emitted = 0;
  std::optional<std::string> last_resource;
  std::vector<Event> events;
  std::vector<std::size_t> instances;
};

void check_loops(const Node& n) {
  if (n.kind == NodeKind::Loop && !n.max_redo && n.redo_probability.value_or(kDefaultRedoProbability) >= 1.0) {
    throw Error(ErrorCode::UnboundedLoop, "loop always redoes and has no max_redo", render_node(n));
  }
  for (const auto& c : n.children) check_loops(c);
}

class Engine {
 public:
  Engine(const ProcessTree& tree, const ParameterSet& params, const SimConfig& config)
      : tree_(tree), params_(params), config_(config), rng_(config.seed) {
    if (config_.num_cases == 0) throw Error(ErrorCode::InvalidArgument, "num_cases must be at least 1");
    require_valid(tree_);
    check_loops(tree_.root);
    calendar_ = config_.calendar_override.value_or(params_.calendar);
    arrival_ = config_.arrival_override.value_or(params_.arrival);
    capacity_limit_ = config_.process_capacity_override ? config_.process_capacity_override : params_.process_capacity;
    ParameterSet effective = params_;
    effective.calendar = calendar_;
    effective.arrival = arrival_;
    effective.process_capacity = capacity_limit_;
    validate_parameters(effective);
    for (const auto& w : config_.interrupt_process) {
      if (!(w.from < w.to)) throw Error(ErrorCode::InvalidArgument, "process pause window must satisfy from < to");
    }
    pauses_ = config_.interrupt_process;
    std::sort(pauses_.begin(), pauses_.end(), [](const auto& a, const auto& b) { return a.from < b.from; });
    for (const auto& a : leaf_activities(tree_.root)) profiles_.emplace(a, params_.profile_for(a));
  }

  SimResult run() {
    now_ = config_.start_time;
    next_arrival_base_ = config_.start_time;
    schedule(arrival_time(next_arrival_base_), SimEventKind::CaseArrival, 0);
    if (config_.interrupt_case) schedule_next_close(config_.start_time);
    for (std::size_t i = 0; i < pauses_.size(); ++i) {
      const auto& w = pauses_[i];
      if (w.to > config_.start_time) {
        schedule(std::max(w.from, config_.start_time), SimEventKind::ProcessPauseBegin, 0, i);
      }
    }

    while (!queue_.empty() && active()) {
      const SimEvent ev = queue_.top();
      queue_.pop();
      if (ev.time < now_) throw std::logic_error("simulation clock moved backwards");
      now_ = ev.time;
      handle(ev);
      dispatch();
    }
    if (active()) {
      throw Error(ErrorCode::DeadlockDetected, "work remains but no event can be scheduled",
                  "open cases " + std::to_string(open_cases_) + ", waiting for admission " +
                      std::to_string(admission_.size()) + ", ready instances " + std::to_string(ready_.size()));
    }
    return finish();
  }

 private:
  bool active() const { return arrived_ < config_.num_cases || open_cases_ > 0 || !admission_.empty(); }

  void schedule(Timestamp t, SimEventKind kind, std::size_t case_index, std::size_t instance = 0,
                std::uint64_t generation = 0) {
    if (t < now_) throw std::logic_error("event scheduled in the past");
    queue_.push(SimEvent{t, seq_++, kind, case_index, instance, generation});
  }

  Timestamp arrival_time(Timestamp base) const { return calendar_.next_open(base).value_or(base); }

  bool in_pause(Timestamp t) const {
    return std::any_of(pauses_.begin(), pauses_.end(), [&](const auto& w) { return w.from <= t && t < w.to; });
  }

  bool gate_open(Timestamp t) const { return calendar_.is_open(t) && !in_pause(t); }

  std::optional<Timestamp> next_gate_open(Timestamp t) const {
    for (std::size_t guard = 0; guard <= pauses_.size() + 1; ++guard) {
      const auto open = calendar_.next_open(t);
      if (!open) return std::nullopt;
      t = *open;
      const auto w = std::find_if(pauses_.begin(), pauses_.end(), [&](const auto& p) { return p.from <= t && t < p.to; });
      if (w == pauses_.end()) return t;
      t = w->to;
    }
    return std::nullopt;
  }

  void schedule_wakeup(Timestamp t) {
    if (wakeups_.insert(t).second) schedule(t, SimEventKind::Wakeup, 0);
  }

  void schedule_next_close(Timestamp from) {
    const auto open = calendar_.next_open(from);
    if (!open) return;
    if (const auto close = calendar_.next_close(*open)) schedule(*close, SimEventKind::CalendarClose, 0);
  }

  std::size_t min_len(const Node* n) {
    const auto it = min_len_.find(n);
    if (it != min_len_.end()) return it->second;
    return min_len_[n] = min_length(*n);
  }

  // Least number of events the frame must still enable.
  std::size_t remaining(CaseState& c, int fi) {
    const Frame& f = c.frames[static_cast<std::size_t>(fi)];
    std::size_t sum = 0;
    for (const int a : f.active) sum += remaining(c, a);
    switch (f.node->kind) {
      case NodeKind::Sequence:
        for (std::size_t i = f.current + 1; i < f.node->children.size(); ++i) sum += min_len(&f.node->children[i]);
        break;
      case NodeKind::Loop:
        if (f.in_redo) sum += min_len(&f.node->children.front());
        break;
      default:
        break;
    }
    return sum;
  }

  // -- tree walking ---------------------------------------------------------

  void start_child(std::size_t ci, int parent, std::size_t child) {
    CaseState& c = cases_[ci];
    Frame f;
    f.node = &c.frames[static_cast<std::size_t>(parent)].node->children[child];
    f.parent = parent;
    f.child_index = child;
    c.frames.push_back(std::move(f));
    const int fi = static_cast<int>(c.frames.size() - 1);
    Frame& p = c.frames[static_cast<std::size_t>(parent)];
    p.active.push_back(fi);
    p.current = child;
    if (p.node->kind == NodeKind::Loop) p.in_redo = child != 0;
    start_frame(ci, fi);
  }

  void start_frame(std::size_t ci, int fi) {
    const Node& n = *cases_[ci].frames[static_cast<std::size_t>(fi)].node;
    switch (n.kind) {
      case NodeKind::Activity:
        enable_activity(ci, fi);
        break;
      case NodeKind::Tau:
        complete_frame(ci, fi);
        break;
      case NodeKind::Sequence:
        start_child(ci, fi, 0);
        break;
      case NodeKind::Xor: {
        std::size_t branch;
        if (n.weights.empty()) {
          branch = rng_.index(n.children.size());
        } else {
          branch = rng_.weighted(n.weights);
        }
        start_child(ci, fi, branch);
        break;
      }
      case NodeKind::Parallel:
        cases_[ci].frames[static_cast<std::size_t>(fi)].pending = n.children.size();
        for (std::size_t i = 0; i < n.children.size(); ++i) start_child(ci, fi, i);
        break;
      case NodeKind::Loop:
        start_child(ci, fi, 0);
        break;
    }
  }

  void complete_frame(std::size_t ci, int fi) {
    CaseState& c = cases_[ci];
    const int p = c.frames[static_cast<std::size_t>(fi)].parent;
    if (p < 0) {
      finish_case(ci);
      return;
    }
    auto& act = c.frames[static_cast<std::size_t>(p)].active;
    act.erase(std::remove(act.begin(), act.end(), fi), act.end());
    child_done(ci, p, fi);
  }

  void child_done(std::size_t ci, int p, int fi) {
    CaseState& c = cases_[ci];
    const Node& n = *c.frames[static_cast<std::size_t>(p)].node;
    const std::size_t child = c.frames[static_cast<std::size_t>(fi)].child_index;
    switch (n.kind) {
      case NodeKind::Sequence:
        if (child + 1 < n.children.size()) {
          start_child(ci, p, child + 1);
        } else {
          complete_frame(ci, p);
        }
        break;
      case NodeKind::Xor:
        complete_frame(ci, p);
        break;
      case NodeKind::Parallel:
        if (--c.frames[static_cast<std::size_t>(p)].pending == 0) complete_frame(ci, p);
        break;
      case NodeKind::Loop:
        if (child != 0) {
          start_child(ci, p, 0);
        } else if (auto redo = decide_redo(ci, p)) {
          ++cases_[ci].frames[static_cast<std::size_t>(p)].redo_count;
          start_child(ci, p, *redo);
        } else {
          complete_frame(ci, p);
        }
        break;
      default:
        break;
    }
  }

  std::optional<std::size_t> decide_redo(std::size_t ci, int p) {
    CaseState& c = cases_[ci];
    const Frame& f = c.frames[static_cast<std::size_t>(p)];
    const Node& n = *f.node;
    if (n.max_redo && f.redo_count >= *n.max_redo) return std::nullopt;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i < n.children.size(); ++i) candidates.push_back(i);
    if (tree_.max_trace_length) {
      // Redo only while the case can still finish within the length cap.
      const std::size_t base = c.emitted + remaining(c, 0) + min_len(&n.children.front());
      std::erase_if(candidates, [&](std::size_t i) { return base + min_len(&n.children[i]) > *tree_.max_trace_length; });
      if (candidates.empty()) return std::nullopt;
    }
    if (!(rng_.uniform() < n.redo_probability.value_or(kDefaultRedoProbability))) return std::nullopt;
    return candidates.size() == 1 ? candidates.front() : candidates[rng_.index(candidates.size())];
  }

  void enable_activity(std::size_t ci, int fi) {
    CaseState& c = cases_[ci];
    if (c.truncated) {
      complete_frame(ci, fi);
      return;
    }
    if (tree_.max_trace_length && c.emitted >= *tree_.max_trace_length) {
      c.truncated = true;
      ++truncated_;
      complete_frame(ci, fi);
      return;
    }
    ++c.emitted;
    Instance inst;
    inst.case_index = ci;
    inst.frame = fi;
    inst.profile = &profiles_.at(c.frames[static_cast<std::size_t>(fi)].node->label);
    inst.enabled = now_;
    const auto delay = static_cast<std::int64_t>(std::llround(std::max(0.0, inst.profile->mean_waiting)));
    inst.ready_at = now_ + Seconds{delay};
    const std::size_t id = instances_.size();
    instances_.push_back(std::move(inst));
    c.instances.push_back(id);
    if (delay == 0) {
      make_ready(id);
    } else {
      schedule(instances_[id].ready_at, SimEventKind::ActivityReady, ci, id, instances_[id].generation);
    }
  }

  void make_ready(std::size_t id) {
    Instance& inst = instances_[id];
    const CaseState& c = cases_[inst.case_index];
    inst.duration = static_cast<std::int64_t>(std::llround(sample_duration(*inst.profile, rng_)));
    inst.remaining = inst.duration;
    inst.resource = next_resource(*inst.profile, params_.handover, c.last_resource, rng_);
    inst.state = InstanceState::Ready;
    ready_.push_back(id);
  }

  bool can_start(const Instance& inst) const {
    const auto busy = activity_busy_.find(inst.profile->activity);
    if (busy != activity_busy_.end() && busy->second >= inst.profile->capacity) return false;
    if (inst.resource != kSystemResource && busy_resources_.count(inst.resource)) return false;
    return true;
  }

  void dispatch() {
    if (ready_.empty()) return;
    if (!gate_open(now_)) {
      if (const auto t = next_gate_open(now_)) schedule_wakeup(*t);
      return;
    }
    std::deque<std::size_t> waiting;
    for (const std::size_t id : ready_) {
      if (can_start(instances_[id])) {
        start(id);
      } else {
        waiting.push_back(id);
      }
    }
    ready_ = std::move(waiting);
  }

  void start(std::size_t id) {
    Instance& inst = instances_[id];
    inst.state = InstanceState::Running;
    inst.started = now_;
    inst.last_resume = now_;
    ++activity_busy_[inst.profile->activity];
    if (inst.resource != kSystemResource) busy_resources_.insert(inst.resource);
    run_segment(id);
  }

  void run_segment(std::size_t id) {
    Instance& inst = instances_[id];
    const Timestamp finish = now_ + Seconds{inst.remaining};
    if (config_.interrupt_activity) {
      const auto close = calendar_.next_close(now_);
      if (close && finish > *close) {
        schedule(*close, SimEventKind::ActivityPause, inst.case_index, id, inst.generation);
        return;
      }
    }
    schedule(finish, SimEventKind::ActivityComplete, inst.case_index, id, inst.generation);
  }

  void handle(const SimEvent& ev) {
    switch (ev.kind) {
      case SimEventKind::CaseArrival:
        on_arrival();
        break;
      case SimEventKind::ActivityReady: {
        Instance& inst = instances_[ev.instance];
        if (inst.generation == ev.generation && inst.state == InstanceState::Delaying) make_ready(ev.instance);
        break;
      }
      case SimEventKind::ActivityPause: {
        Instance& inst = instances_[ev.instance];
        inst.remaining -= (now_ - inst.last_resume).count();
        inst.state = InstanceState::Paused;
        const Timestamp resume = calendar_.next_open(now_).value_or(now_);
        interruptions_.push_back(InterruptionRecord{cases_[inst.case_index].id, inst.profile->activity,
                                                    InterruptionKind::Activity, now_, resume});
        schedule(resume, SimEventKind::Resume, inst.case_index, ev.instance, inst.generation);
        break;
      }
      case SimEventKind::Resume: {
        Instance& inst = instances_[ev.instance];
        inst.state = InstanceState::Running;
        inst.last_resume = now_;
        run_segment(ev.instance);
        break;
      }
      case SimEventKind::ActivityComplete:
        on_complete(ev.instance);
        break;
      case SimEventKind::Wakeup:
        wakeups_.erase(ev.time);
        break;
      case SimEventKind::CalendarClose:
        on_calendar_close();
        break;
      case SimEventKind::ProcessPauseBegin: {
        const auto& w = pauses_[ev.instance];
        interruptions_.push_back(InterruptionRecord{"", "", InterruptionKind::Process, w.from, w.to});
        schedule_wakeup(w.to);
        break;
      }
    }
  }

  void on_arrival() {
    const std::size_t ci = cases_.size();
    CaseState c;
    c.id = "case_" + std::to_string(ci + 1);
    c.arrival = now_;
    cases_.push_back(std::move(c));
    ++arrived_;
    if (arrived_ < config_.num_cases) {
      double gap = arrival_.kind == ArrivalKind::Exponential
                       ? rng_.exponential(arrival_.mean_interarrival)
                       : rng_.normal(arrival_.mean_interarrival, arrival_.std_interarrival);
      gap = std::max(0.0, gap);
      next_arrival_base_ += Seconds{static_cast<std::int64_t>(std::llround(gap))};
      schedule(std::max(now_, arrival_time(next_arrival_base_)), SimEventKind::CaseArrival, ci + 1);
    }
    if (capacity_limit_ && open_cases_ >= *capacity_limit_) {
      admission_.push_back(ci);
    } else {
      admit(ci);
    }
  }

  void admit(std::size_t ci) {
    ++open_cases_;
    CaseState& c = cases_[ci];
    c.admitted = true;
    c.admitted_at = now_;
    Frame root;
    root.node = &tree_.root;
    c.frames.push_back(std::move(root));
    start_frame(ci, 0);
  }

  void finish_case(std::size_t ci) {
    CaseState& c = cases_[ci];
    c.done = true;
    c.completion = now_;
    --open_cases_;
    if (!admission_.empty()) {
      const std::size_t next = admission_.front();
      admission_.pop_front();
      admit(next);
    }
  }

  void on_complete(std::size_t id) {
    Instance& inst = instances_[id];
    inst.state = InstanceState::Done;
    --activity_busy_[inst.profile->activity];
    if (inst.resource != kSystemResource) busy_resources_.erase(inst.resource);
    CaseState& c = cases_[inst.case_index];
    Event e;
    e.case_id = c.id;
    e.activity = inst.profile->activity;
    e.start_time = inst.started;
    e.end_time = now_;
    if (inst.resource != kSystemResource) {
      e.resource = inst.resource;
      c.last_resource = inst.resource;
    }
    c.events.push_back(std::move(e));
    executions_.push_back(ExecutionRecord{c.id, inst.profile->activity, inst.resource, inst.enabled, inst.started,
                                          now_, inst.duration});
    complete_frame(inst.case_index, inst.frame);
  }

  void on_calendar_close() {
    const Timestamp reopen = calendar_.next_open(now_).value_or(now_);
    const Seconds shift = reopen - now_;
    for (std::size_t ci = 0; ci < cases_.size(); ++ci) {
      CaseState& c = cases_[ci];
      if (!c.admitted || c.done) continue;
      interruptions_.push_back(InterruptionRecord{c.id, "", InterruptionKind::Case, now_, reopen});
      for (const std::size_t id : c.instances) {
        Instance& inst = instances_[id];
        if (inst.state != InstanceState::Delaying || inst.ready_at <= now_) continue;
        inst.ready_at += shift;
        ++inst.generation;
        schedule(inst.ready_at, SimEventKind::ActivityReady, ci, id, inst.generation);
      }
    }
    if (active()) schedule_next_close(now_);
  }

  SimResult finish() {
    SimResult result;
    std::vector<Trace> traces;
    Timestamp horizon_end = config_.start_time;
    for (const auto& c : cases_) {
      result.cases.push_back(CaseRecord{c.id, c.arrival, c.admitted_at, c.completion, c.events.size(), c.truncated});
      horizon_end = std::max(horizon_end, c.completion);
      if (c.events.empty()) {
        ++result.empty_cases;
        continue;
      }
      traces.push_back(Trace{c.id, c.events});
    }
    result.log = EventLog(std::move(traces));
    result.executions = std::move(executions_);
    result.interruptions = std::move(interruptions_);
    result.truncated_cases = truncated_;
    result.kpis = kpi_summary(result.executions, result.cases, config_.start_time, horizon_end);
    return result;
  }

  const ProcessTree& tree_;
  const ParameterSet& params_;
  const SimConfig& config_;
  Rng rng_;
  Calendar calendar_;
  ArrivalProfile arrival_;
  std::optional<std::size_t> capacity_limit_;
  std::vector<ProcessPause> pauses_;
  std::map<std::string, ActivityProfile> profiles_;
  std::map<const Node*, std::size_t> min_len_;

  Timestamp now_{};
  Timestamp next_arrival_base_{};
  std::uint64_t seq_ = 0;
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue_;
  std::set<Timestamp> wakeups_;

  std::vector<CaseState> cases_;
  std::vector<Instance> instances_;
  std::deque<std::size_t> ready_;
  std::deque<std::size_t> admission_;
  std::map<std::string, int> activity_busy_;
  std::set<std::string> busy_resources_;
  std::size_t arrived_ = 0;
  std::size_t open_cases_ = 0;
  std::size_t truncated_ = 0;

  std::vector<ExecutionRecord> executions_;
  std::vector<InterruptionRecord> interruptions_;
};

}  // namespace

std::string_view to_string(InterruptionKind kind) {
  switch (kind) {
    case InterruptionKind::Activity: return "activity";
    case InterruptionKind::Case: return "case";
    case InterruptionKind::Process: return "process";
  }
  return "?";
}

double sample_duration(const ActivityProfile& profile, Rng& rng) {
  if (profile.std_duration <= 0.0) return profile.mean_duration;
  for (int i = 0; i < kMaxNegativeRedraws; ++i) {
    const double d = rng.normal(profile.mean_duration, profile.std_duration);
    if (d >= 0.0) return d;
  }
  return 0.0;
}

std::string next_resource(const ActivityProfile& profile, const HandoverMatrix& handover,
                          const std::optional<std::string>& last, Rng& rng) {
  if (profile.resources.empty()) return kSystemResource;
  const std::vector<std::string> capable(profile.resources.begin(), profile.resources.end());
  if (capable.size() == 1) return capable.front();
  std::vector<double> weights(capable.size(), 0.0);
  double total = 0.0;
  if (last) {
    for (std::size_t i = 0; i < capable.size(); ++i) {
      weights[i] = static_cast<double>(handover.count(*last, capable[i]));
      total += weights[i];
    }
  }
  if (total <= 0.0) return capable[rng.index(capable.size())];
  return capable[rng.weighted(weights)];
}

KpiReport kpi_summary(const std::vector<ExecutionRecord>& executions, const std::vector<CaseRecord>& cases,
                      Timestamp horizon_start, Timestamp horizon_end) {
  KpiReport r;
  r.empty = executions.empty() && cases.empty();
  struct Point {
    Timestamp at;
    int delta;
    bool operator<(const Point& o) const { return at != o.at ? at < o.at : delta < o.delta; }
  };
  std::map<std::string, std::vector<Point>> queue_points;
  std::map<std::string, double> case_waiting;
  for (const auto& e : executions) {
    auto& k = r.activities[e.activity];
    const double wait = static_cast<double>((e.started - e.enabled).count());
    ++k.executions;
    k.mean_waiting += wait;
    k.max_waiting = std::max(k.max_waiting, wait);
    k.mean_service += static_cast<double>(e.service_seconds);
    case_waiting[e.case_id] += wait;
    queue_points[e.activity].push_back({e.enabled, +1});
    queue_points[e.activity].push_back({e.started, -1});
  }
  const double horizon = static_cast<double>((horizon_end - horizon_start).count());
  for (auto& [a, k] : r.activities) {
    k.mean_waiting /= static_cast<double>(k.executions);
    k.mean_service /= static_cast<double>(k.executions);
    auto& pts = queue_points[a];
    std::sort(pts.begin(), pts.end());
    long cur = 0;
    double area = 0.0;
    Timestamp prev = horizon_start;
    for (const auto& p : pts) {
      area += static_cast<double>(cur) * static_cast<double>((p.at - prev).count());
      prev = p.at;
      cur += p.delta;
      k.max_queue_length = std::max<std::size_t>(k.max_queue_length, static_cast<std::size_t>(std::max(0L, cur)));
    }
    k.mean_queue_length = horizon > 0.0 ? area / horizon : 0.0;
  }
  double total = 0.0;
  for (const auto& c : cases) {
    CaseKpi ck;
    ck.case_id = c.case_id;
    ck.sojourn = static_cast<double>((c.completion - c.arrival).count());
    ck.waiting = case_waiting[c.case_id];
    total += ck.sojourn;
    r.max_sojourn = std::max(r.max_sojourn, ck.sojourn);
    r.cases.push_back(std::move(ck));
  }
  if (!cases.empty()) r.mean_sojourn = total / static_cast<double>(cases.size());
  return r;
}

SimResult simulate(const ProcessTree& tree, const ParameterSet& params, const SimConfig& config) {
  return Engine(tree, params, config).run();
}

void write_interruptions_csv(const std::vector<InterruptionRecord>& records, std::ostream& out) {
  out << "case_id,activity,kind,paused_at,resumed_at\n";
  auto field = [&](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
      out << s;
      return;
    }
    out << '"';
    for (const char c : s) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  };
  for (const auto& r : records) {
    field(r.case_id);
    out << ',';
    field(r.activity);
    out << ',' << to_string(r.kind) << ',' << format_timestamp(r.paused_at) << ',' << format_timestamp(r.resumed_at)
        << '\n';
  }
}

}  // namespace ptsim
