// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <ptsim/discovery.hpp>
#include <ptsim/emd.hpp>
#include <ptsim/error.hpp>
#include <ptsim/eventlog.hpp>
#include <ptsim/params.hpp>
#include <ptsim/ptree.hpp>
#include <ptsim/simengine.hpp>

#include "oracles.hpp"

using namespace ptsim;
using namespace ptsim::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (ok) detail.str("");
    ok = false;
    detail << why << "; ";
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

EventLog load(const std::string& name) {
  std::ifstream in(std::string(PTSIM_DATA_DIR) + "/" + name);
  if (!in) throw Error(ErrorCode::InvalidArgument, "missing bundled log", name);
  return parse_csv(in);
}

SimConfig config(std::size_t cases, std::uint64_t seed, Timestamp start = at(0)) {
  SimConfig c;
  c.num_cases = cases;
  c.seed = seed;
  c.start_time = start;
  return c;
}

ActivityProfile profile(const std::string& a, double mean, double std = 0.0, int capacity = 1,
                        std::set<std::string> resources = {}) {
  return ActivityProfile{a, mean, std, capacity, std::move(resources), 0.0};
}

ParameterSet random_params(std::mt19937_64& gen, const ProcessTree& t) {
  ParameterSet p;
  for (const auto& a : leaf_activities(t.root)) {
    std::set<std::string> res;
    for (int k = 0; k < 3; ++k) {
      if (gen() % 2) res.insert("r" + std::to_string(gen() % 4));
    }
    p.activities[a] = profile(a, static_cast<double>(gen() % 7200), static_cast<double>(gen() % 1800),
                              1 + static_cast<int>(gen() % 2), res);
  }
  p.arrival = ArrivalProfile{static_cast<double>(300 + gen() % 3600), 0, ArrivalKind::Exponential};
  return p;
}

Calendar office_hours() {
  Calendar::Week w;
  for (std::size_t d = 0; d < 5; ++d) w[d] = {{8, 12}, {13, 18}};
  return Calendar(w);
}

// ---- criteria -------------------------------------------------------------------

Verdict round_trip() {
  Verdict v;
  for (const char* name : {"order.csv", "claims.csv", "helpdesk.csv"}) {
    const auto t0 = Clock::now();
    const EventLog source = load(name);
    const ProcessTree tree = annotate(discover_tree(source), source);
    const ParameterSet params = mine_parameters(source).params;
    const SimResult sim = simulate(tree, params, config(source.size(), 42, source.span()->first));
    const double d = emd(source, sim.log).distance;
    const double elapsed = seconds_since(t0);
    v.detail << name << " emd=" << fmt(d) << " in " << fmt(elapsed, 2) << "s; ";
    if (d > 0.40) v.fail(std::string(name) + " emd " + fmt(d) + " > 0.40");
    if (elapsed >= 30.0) v.fail(std::string(name) + " took " + fmt(elapsed) + "s");
  }
  return v;
}

Verdict discovery() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto found = [](const std::vector<ActivitySequence>& s) { return render_tree(discover_tree(log_of(s))); };
  std::vector<ActivitySequence> xor_log(3, seq("a"));
  xor_log.insert(xor_log.end(), 7, seq("b"));
  const std::vector<std::pair<std::string, std::string>> examples{
      {found(std::vector<ActivitySequence>(10, seq("a b"))), "->(a, b)"},
      {found(xor_log), "X(a, b)"},
      {found({seq("a b"), seq("b a")}), "+(a, b)"},
      {found({seq("a b"), seq("a")}), "->(a, X(b, tau))"},
  };
  for (const auto& [got, want] : examples) {
    if (got != want) v.fail("expected " + want + ", got " + got);
  }
  std::mt19937_64 gen(2024);
  std::size_t unfit = 0;
  for (int i = 0; i < 100; ++i) {
    const auto seqs = random_sequences(gen, 1 + gen() % 12, 5, 4);
    const auto t = discover_tree(log_of(seqs));
    for (const auto& s : seqs) unfit += enumerate_language(t, s.size()).count(s) ? 0 : 1;
  }
  if (unfit) v.fail(std::to_string(unfit) + " traces outside the discovered language");
  const double elapsed = seconds_since(t0);
  if (elapsed >= 10.0) v.fail("took " + fmt(elapsed) + "s");
  if (v.ok) v.detail << "4 examples exact, 100 random logs fit, " << fmt(elapsed, 2) << "s";
  return v;
}

Verdict language_soundness() {
  Verdict v;
  std::mt19937_64 gen(99);
  std::size_t variants_checked = 0, violations = 0;
  for (int i = 0; i < 50; ++i) {
    TreeShape shape;
    shape.max_leaves = 10;
    const ProcessTree t = random_tree(gen, shape);
    const auto bound = max_length(t.root);
    if (!bound) {
      v.fail("generator produced an unbounded tree");
      continue;
    }
    const auto language = enumerate_language(t, std::min<std::size_t>(*bound, kMaxEnumerationLength));
    const SimResult r = simulate(t, random_params(gen, t), config(200, static_cast<std::uint64_t>(i)));
    for (const auto& var : variants(r.log)) {
      ++variants_checked;
      if (!language.count(var.sequence)) {
        ++violations;
        if (violations <= 3) v.fail("variant outside language of " + render_tree(t));
      }
    }
  }
  if (violations) v.fail(std::to_string(violations) + " violations");
  if (v.ok) v.detail << "50 trees, " << variants_checked << " variants, 0 violations";
  return v;
}

Verdict safety() {
  Verdict v;
  std::mt19937_64 gen(5150);
  std::size_t runs = 0, violations = 0;
  const auto check = [&](const SimResult& r, const ParameterSet& p, const SimConfig& c, const std::string& what) {
    ++runs;
    const auto audit = audit_run(r, p, c, true);
    if (!audit.ok()) {
      violations += audit.violations.size();
      v.fail(what + ": " + audit.violations.front());
    }
  };
  for (int i = 0; i < 40; ++i) {
    const ProcessTree t = random_tree(gen);
    ParameterSet base = random_params(gen, t);
    for (int calendar = 0; calendar < 2; ++calendar) {
      for (int capped = 0; capped < 2; ++capped) {
        for (int mode = 0; mode < 3; ++mode) {
          ParameterSet p = base;
          if (calendar) p.calendar = office_hours();
          if (capped) p.process_capacity = 1 + gen() % 3;
          SimConfig c = config(80, runs, at(static_cast<std::int64_t>(gen() % (7 * 86400))));
          c.interrupt_activity = mode == 1;
          c.interrupt_case = mode == 2;
          if (mode == 2) c.interrupt_process.push_back({c.start_time + Seconds{7200}, c.start_time + Seconds{5 * 3600}});
          check(simulate(t, p, c), p, c, render_tree(t));
        }
      }
    }
  }
  for (const char* name : {"order.csv", "claims.csv", "helpdesk.csv", "loan_skip.csv"}) {
    const EventLog source = load(name);
    const ProcessTree t = annotate(discover_tree(source), source);
    const ParameterSet p = mine_parameters(source).params;
    const SimConfig c = config(500, 3, source.span()->first);
    check(simulate(t, p, c), p, c, name);
  }
  if (v.ok) v.detail << runs << " runs audited, 0 violations";
  return v;
}

Verdict calibration() {
  Verdict v;
  constexpr std::size_t n = 1000;
  std::size_t checks = 0;
  for (const double w : {0.1, 0.3, 0.5, 0.8}) {
    const ProcessTree t = parse_tree("X(a:" + fmt(w, 6) + ", b:" + fmt(1 - w, 6) + ")");
    ParameterSet p;
    p.activities["a"] = profile("a", 1);
    p.activities["b"] = profile("b", 1);
    const SimResult r = simulate(t, p, config(n, 17));
    std::size_t hits = 0;
    for (const auto& tr : r.log.traces()) hits += tr.events[0].activity == "a";
    const double f = static_cast<double>(hits) / n;
    const double bound = 4 * std::sqrt(w * (1 - w) / n);
    ++checks;
    if (std::abs(f - w) > bound) v.fail("X weight " + fmt(w) + " observed " + fmt(f));
  }
  {
    const ProcessTree t = parse_tree("->(a, X(b:0.25, ->(c, X(d:0.6, e:0.4)):0.75))");
    ParameterSet p;
    for (const char* a : {"a", "b", "c", "d", "e"}) p.activities[a] = profile(a, 1);
    const SimResult r = simulate(t, p, config(n, 23));
    std::size_t b = 0, d = 0, through_c = 0;
    for (const auto& tr : r.log.traces()) {
      const auto s = tr.activities();
      b += s[1] == "b";
      if (s[1] == "c") {
        ++through_c;
        d += s[2] == "d";
      }
    }
    const auto within = [&](double hits, double total, double w, const std::string& label) {
      ++checks;
      if (std::abs(hits / total - w) > 4 * std::sqrt(w * (1 - w) / total)) v.fail(label + " off");
    };
    within(static_cast<double>(b), n, 0.25, "nested outer branch");
    within(static_cast<double>(d), static_cast<double>(through_c), 0.6, "nested inner branch");
  }
  {
    const ProcessTree t = parse_tree("->(a, b, c)");
    ParameterSet p;
    p.activities["a"] = profile("a", 600, 120);
    p.activities["b"] = profile("b", 3600, 900, 2);
    p.activities["c"] = profile("c", 45, 10, 3);
    p.arrival = ArrivalProfile{900, 0, ArrivalKind::Exponential};
    const SimResult r = simulate(t, p, config(n, 31));
    std::map<std::string, std::vector<double>> samples;
    for (const auto& e : r.executions) samples[e.activity].push_back(static_cast<double>(e.service_seconds));
    for (const auto& [a, prof] : p.activities) {
      const auto& xs = samples[a];
      double sum = 0;
      for (double x : xs) sum += x;
      const double mean = sum / static_cast<double>(xs.size());
      ++checks;
      if (std::abs(mean - prof.mean_duration) > 4 * prof.std_duration / std::sqrt(static_cast<double>(xs.size()))) {
        v.fail("duration mean of " + a + " is " + fmt(mean) + ", configured " + fmt(prof.mean_duration));
      }
    }
  }
  if (v.ok) v.detail << checks << " frequency and duration checks within 4 sigma";
  return v;
}

Verdict determinism() {
  Verdict v;
  std::mt19937_64 gen(8080);
  std::size_t models = 0;
  const auto compare = [&](const ProcessTree& t, const ParameterSet& p, const std::string& what) {
    ++models;
    const SimConfig c1 = config(200, 1), c2 = config(200, 2);
    const std::string a = write_csv_string(simulate(t, p, c1).log);
    const std::string b = write_csv_string(simulate(t, p, c1).log);
    const std::string c = write_csv_string(simulate(t, p, c2).log);
    if (a != b) v.fail(what + ": same seed, different bytes");
    if (a == c) v.fail(what + ": different seeds, identical log");
  };
  for (const char* name : {"order.csv", "claims.csv", "helpdesk.csv"}) {
    const EventLog source = load(name);
    compare(annotate(discover_tree(source), source), mine_parameters(source).params, name);
  }
  for (int i = 0; i < 10; ++i) {
    const ProcessTree t = random_tree(gen);
    compare(t, random_params(gen, t), render_tree(t));
  }
  if (v.ok) v.detail << models << " models byte-identical per seed, distinct across seeds";
  return v;
}

std::vector<Variant> random_variants(std::mt19937_64& gen, std::size_t max_variants) {
  std::set<ActivitySequence> seen;
  const std::size_t k = 1 + gen() % max_variants;
  while (seen.size() < k) {
    ActivitySequence s;
    const std::size_t len = 1 + gen() % 5;
    for (std::size_t i = 0; i < len; ++i) s.push_back(std::string(1, static_cast<char>('a' + gen() % 4)));
    seen.insert(s);
  }
  std::vector<Variant> out;
  for (const auto& s : seen) out.push_back({s, 1 + gen() % 9});
  return out;
}

Verdict emd_exactness() {
  Verdict v;
  std::mt19937_64 gen(1234);
  double worst = 0;
  constexpr int instances = 200;
  for (int i = 0; i < instances; ++i) {
    const auto v1 = random_variants(gen, 4), v2 = random_variants(gen, 4);
    const double d = emd(v1, v2).distance;
    worst = std::max(worst, std::abs(d - lp_emd_oracle(v1, v2)));
    if (d != emd(v2, v1).distance) v.fail("asymmetric instance");
    if (emd(v1, v1).distance != 0.0) v.fail("emd(L, L) != 0");
  }
  if (worst > 1e-9) v.fail("max deviation from oracle " + fmt(worst));
  if (v.ok) v.detail << instances << " instances, max deviation " << worst << ", symmetric, self-distance 0";
  return v;
}

Verdict parameter_mining() {
  Verdict v;
  std::mt19937_64 gen(31337);
  const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
  for (int i = 0; i < 20; ++i) {
    const EventLog log = random_log(gen);
    if (log.event_count() > 200) v.fail("generator exceeded 200 events");
    const std::string tag = "log " + std::to_string(i) + ": ";
    const Stat arr = oracle_arrival(log);
    const ArrivalProfile a = mine_arrival(log);
    if (log.size() >= 2 && (!close(a.mean_interarrival, arr.mean > 0 ? arr.mean : 1.0) || !close(a.std_interarrival, arr.std))) {
      v.fail(tag + "arrival");
    }
    const auto durations = mine_durations(log);
    for (const auto& [act, s] : oracle_durations(log)) {
      const auto& got = durations.per_activity.at(act);
      if (!close(got.mean, s.mean) || !close(got.std, s.std)) v.fail(tag + "duration of " + act);
    }
    if (mine_capacity(log) != oracle_capacity(log)) v.fail(tag + "capacity");
    const auto [resources, handover] = mine_resources_and_handover(log);
    if (resources != oracle_resources(log)) v.fail(tag + "resources");
    if (handover.counts != oracle_handover(log)) v.fail(tag + "handover");
    if (mine_calendar(log) != oracle_calendar(log)) v.fail(tag + "calendar");
    const auto waiting = mine_waiting(log);
    for (const auto& [act, w] : oracle_waiting(log)) {
      if (!close(waiting.at(act), w)) v.fail(tag + "waiting of " + act);
    }
    if (mine_process_capacity(log).capacity != oracle_process_capacity(log)) v.fail(tag + "process capacity");
  }
  if (v.ok) v.detail << "20 random logs, all operations equal the brute-force oracles";
  return v;
}

std::optional<NodeId> find_skip(const Node& n, const std::string& activity, NodeId at = {}) {
  if (n.kind == NodeKind::Xor && n.children.size() == 2) {
    const bool has_tau = n.children[0].kind == NodeKind::Tau || n.children[1].kind == NodeKind::Tau;
    const bool has_act = (n.children[0].kind == NodeKind::Activity && n.children[0].label == activity) ||
                         (n.children[1].kind == NodeKind::Activity && n.children[1].label == activity);
    if (has_tau && has_act) return at;
  }
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    NodeId child = at;
    child.push_back(i);
    if (auto found = find_skip(n.children[i], activity, child)) return found;
  }
  return std::nullopt;
}

Verdict skip_to_sequence() {
  Verdict v;
  const std::string required = "A_Create Application";
  const EventLog source = load("loan_skip.csv");
  const ProcessTree before = annotate(discover_tree(source), source);
  const ParameterSet params = mine_parameters(source).params;
  const auto skip = find_skip(before.root, required);
  if (!skip) {
    v.fail("no X(" + required + ", tau) in " + render_tree(before));
    return v;
  }
  const Node& xor_node = *find_node(before.root, *skip);
  const std::size_t tau_pos = xor_node.children[0].kind == NodeKind::Tau ? 0 : 1;
  ProcessTree after = apply_edit(before, edit::ChangeOperator{*skip, NodeKind::Sequence});
  after = apply_edit(after, edit::DeleteChild{*skip, tau_pos});

  const SimConfig c = config(source.size(), 11, source.span()->first);
  const SimResult sim_before = simulate(before, params, c);
  const SimResult sim_after = simulate(after, params, c);
  std::size_t missing = 0, skipped_before = 0;
  for (const auto& t : sim_after.log.traces()) {
    const auto s = t.activities();
    missing += std::find(s.begin(), s.end(), required) == s.end();
  }
  for (const auto& t : sim_before.log.traces()) {
    const auto s = t.activities();
    skipped_before += std::find(s.begin(), s.end(), required) == s.end();
  }
  const double d = emd(sim_before.log, sim_after.log).distance;
  if (missing) v.fail(std::to_string(missing) + " traces still miss " + required);
  if (!(d > 0)) v.fail("emd(before, after) = " + fmt(d));
  if (v.ok) {
    v.detail << render_tree(before) << " -> " << render_tree(after) << "; skipped before " << skipped_before
             << ", after 0; emd=" << fmt(d);
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"round-trip fidelity", round_trip},
      {"discovery oracles", discovery},
      {"simulator language soundness", language_soundness},
      {"capacity/resource/calendar safety", safety},
      {"statistical calibration", calibration},
      {"determinism", determinism},
      {"EMD exactness", emd_exactness},
      {"parameter-mining oracles", parameter_mining},
      {"skip-to-sequence edit scenario", skip_to_sequence},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const Error& e) {
      v.fail(std::string(to_string(e.code())) + ": " + e.what() + " " + e.detail());
    } catch (const std::exception& e) {
      v.fail(e.what());
    }
    failed += !v.ok;
    std::cout << (v.ok ? "PASS " : "FAIL ") << name << ": " << v.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
