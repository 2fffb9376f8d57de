#include "ptsim/json_io.hpp"

#include <array>
#include <string>

#include "ptsim/error.hpp"
#include "ptsim/time.hpp"

namespace ptsim {
namespace {

constexpr std::array<const char*, 7> kDayNames = {"monday", "tuesday", "wednesday", "thursday",
                                                  "friday", "saturday", "sunday"};

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "malformed JSON document", field + ": " + what);
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) bad(key, "enclosing value is not an object");
  const auto it = j.find(key);
  if (it == j.end()) bad(key, "missing");
  return *it;
}

template <typename T>
T get_as(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    bad(field, e.what());
  }
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

std::int64_t integer(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<std::int64_t>();
}

std::size_t count(const Json& j, const std::string& field) {
  const std::int64_t v = integer(j, field);
  if (v < 0) bad(field, "must be non-negative");
  return static_cast<std::size_t>(v);
}

bool boolean(const Json& j, const std::string& field) {
  if (!j.is_boolean()) bad(field, "expected true or false");
  return j.get<bool>();
}

Timestamp timestamp(const Json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected a timestamp string");
  const auto t = parse_timestamp(j.get<std::string>());
  if (!t) bad(field, "unparseable timestamp '" + j.get<std::string>() + "'");
  return *t;
}

Node subtree(const Json& j) {
  if (j.is_string()) return parse_tree(j.get<std::string>()).root;
  return node_from_json(j);
}

}  // namespace

Json to_json(const Node& node) {
  Json j{{"kind", std::string(to_string(node.kind))}};
  if (node.kind == NodeKind::Activity) j["name"] = node.label;
  if (is_operator(node.kind)) {
    Json children = Json::array();
    for (const Node& c : node.children) children.push_back(to_json(c));
    j["children"] = std::move(children);
  }
  if (!node.weights.empty()) j["weights"] = node.weights;
  if (node.max_redo) j["max_redo"] = *node.max_redo;
  if (node.redo_probability) j["p_redo"] = *node.redo_probability;
  return j;
}

Node node_from_json(const Json& j) {
  const Json& kind_j = require(j, "kind");
  if (!kind_j.is_string()) bad("kind", "expected a string");
  const auto kind = node_kind_from_string(kind_j.get<std::string>());
  if (!kind) bad("kind", "unknown node kind '" + kind_j.get<std::string>() + "'");
  Node n;
  n.kind = *kind;
  if (n.kind == NodeKind::Activity) {
    const Json& name = require(j, "name");
    if (!name.is_string() || name.get<std::string>().empty()) bad("name", "expected a non-empty string");
    n.label = name.get<std::string>();
  }
  if (is_operator(n.kind)) {
    const Json& children = require(j, "children");
    if (!children.is_array()) bad("children", "expected an array");
    for (const Json& c : children) n.children.push_back(node_from_json(c));
  }
  if (const auto it = j.find("weights"); it != j.end() && !it->is_null()) {
    n.weights = get_as<std::vector<double>>(*it, "weights");
  }
  if (const auto it = j.find("max_redo"); it != j.end() && !it->is_null()) {
    n.max_redo = static_cast<int>(integer(*it, "max_redo"));
  }
  if (const auto it = j.find("p_redo"); it != j.end() && !it->is_null()) {
    n.redo_probability = number(*it, "p_redo");
  }
  return n;
}

Json to_json(const ProcessTree& tree) {
  Json j{{"root", to_json(tree.root)}};
  j["max_trace_length"] = tree.max_trace_length ? Json(*tree.max_trace_length) : Json(nullptr);
  return j;
}

ProcessTree tree_from_json(const Json& j) {
  ProcessTree t;
  t.root = node_from_json(require(j, "root"));
  if (const auto it = j.find("max_trace_length"); it != j.end() && !it->is_null()) {
    t.max_trace_length = count(*it, "max_trace_length");
  }
  return t;
}

Json to_json(const NodeId& id) { return Json(std::vector<std::size_t>(id.begin(), id.end())); }

NodeId node_id_from_json(const Json& j) {
  if (!j.is_array()) bad("node", "expected an array of child indices");
  NodeId id;
  for (const Json& x : j) id.push_back(count(x, "node"));
  return id;
}

TreeEdit tree_edit_from_json(const Json& j) {
  const Json& op_j = require(j, "op");
  if (!op_j.is_string()) bad("op", "expected a string");
  const std::string op = op_j.get<std::string>();
  const NodeId node = node_id_from_json(require(j, "node"));
  if (op == "change_operator") {
    const Json& k = require(j, "kind");
    const auto kind = k.is_string() ? node_kind_from_string(k.get<std::string>()) : std::nullopt;
    if (!kind || !is_operator(*kind)) bad("kind", "expected sequence, xor, parallel or loop");
    return edit::ChangeOperator{node, *kind};
  }
  if (op == "insert_child") {
    return edit::InsertChild{node, count(require(j, "position"), "position"), subtree(require(j, "subtree"))};
  }
  if (op == "delete_child") return edit::DeleteChild{node, count(require(j, "position"), "position")};
  if (op == "set_xor_weights") {
    return edit::SetXorWeights{node, get_as<std::vector<double>>(require(j, "weights"), "weights")};
  }
  if (op == "set_max_redo") {
    std::optional<int> m;
    if (const auto it = j.find("max_redo"); it != j.end() && !it->is_null()) {
      m = static_cast<int>(integer(*it, "max_redo"));
    }
    return edit::SetMaxRedo{node, m};
  }
  if (op == "replace_subtree") return edit::ReplaceSubtree{node, subtree(require(j, "subtree"))};
  if (op == "swap_children") {
    return edit::SwapChildren{node, count(require(j, "first"), "first"), count(require(j, "second"), "second")};
  }
  bad("op", "unknown edit '" + op + "'");
}

Json to_json(const TreeEdit& e) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        Json j{{"node", to_json(x.node)}};
        if constexpr (std::is_same_v<T, edit::ChangeOperator>) {
          j["op"] = "change_operator";
          j["kind"] = std::string(to_string(x.kind));
        } else if constexpr (std::is_same_v<T, edit::InsertChild>) {
          j["op"] = "insert_child";
          j["position"] = x.position;
          j["subtree"] = to_json(x.subtree);
        } else if constexpr (std::is_same_v<T, edit::DeleteChild>) {
          j["op"] = "delete_child";
          j["position"] = x.position;
        } else if constexpr (std::is_same_v<T, edit::SetXorWeights>) {
          j["op"] = "set_xor_weights";
          j["weights"] = x.weights;
        } else if constexpr (std::is_same_v<T, edit::SetMaxRedo>) {
          j["op"] = "set_max_redo";
          j["max_redo"] = x.max_redo ? Json(*x.max_redo) : Json(nullptr);
        } else if constexpr (std::is_same_v<T, edit::ReplaceSubtree>) {
          j["op"] = "replace_subtree";
          j["subtree"] = to_json(x.subtree);
        } else {
          j["op"] = "swap_children";
          j["first"] = x.first;
          j["second"] = x.second;
        }
        return j;
      },
      e);
}

Json to_json(const ArrivalProfile& a) {
  return Json{{"kind", a.kind == ArrivalKind::Exponential ? "exponential" : "normal"},
              {"mean_interarrival", a.mean_interarrival},
              {"std_interarrival", a.std_interarrival}};
}

ArrivalProfile arrival_from_json(const Json& j) {
  ArrivalProfile a;
  a.mean_interarrival = number(require(j, "mean_interarrival"), "arrival.mean_interarrival");
  if (const auto it = j.find("std_interarrival"); it != j.end()) {
    a.std_interarrival = number(*it, "arrival.std_interarrival");
  }
  if (const auto it = j.find("kind"); it != j.end()) {
    const std::string k = get_as<std::string>(*it, "arrival.kind");
    if (k == "exponential") {
      a.kind = ArrivalKind::Exponential;
    } else if (k == "normal") {
      a.kind = ArrivalKind::NormalClamped;
    } else {
      bad("arrival.kind", "expected exponential or normal");
    }
  }
  return a;
}

Json to_json(const Calendar& c) {
  Json j = Json::object();
  for (std::size_t d = 0; d < 7; ++d) {
    Json day = Json::array();
    for (const auto& iv : c.week()[d]) day.push_back({iv.open, iv.close});
    j[kDayNames[d]] = std::move(day);
  }
  return j;
}

Calendar calendar_from_json(const Json& j) {
  if (!j.is_object()) bad("calendar", "expected an object keyed by weekday");
  Calendar::Week week;
  for (const auto& [key, value] : j.items()) {
    std::size_t d = 0;
    while (d < 7 && key != kDayNames[d]) ++d;
    if (d == 7) bad("calendar." + key, "unknown weekday");
    if (value.is_null()) continue;
    if (!value.is_array()) bad("calendar." + key, "expected a list of [open, close] pairs");
    for (const Json& iv : value) {
      if (!iv.is_array() || iv.size() != 2) bad("calendar." + key, "expected [open, close]");
      week[d].push_back({static_cast<int>(integer(iv[0], "calendar." + key)),
                         static_cast<int>(integer(iv[1], "calendar." + key))});
    }
  }
  return Calendar(std::move(week));
}

Json to_json(const ParameterSet& p) {
  Json activities = Json::object();
  for (const auto& [name, a] : p.activities) {
    activities[name] = Json{{"mean_duration", a.mean_duration},
                            {"std_duration", a.std_duration},
                            {"capacity", a.capacity},
                            {"resources", a.resources},
                            {"mean_waiting", a.mean_waiting}};
  }
  Json handover = Json::array();
  for (const auto& [pair, n] : p.handover.counts) {
    handover.push_back(Json{{"from", pair.first}, {"to", pair.second}, {"count", n}});
  }
  Json j{{"arrival", to_json(p.arrival)},
         {"activities", std::move(activities)},
         {"handover", std::move(handover)},
         {"calendar", to_json(p.calendar)}};
  j["process_capacity"] = p.process_capacity ? Json(*p.process_capacity) : Json(nullptr);
  return j;
}

ParameterSet params_from_json(const Json& j) {
  if (!j.is_object()) bad("params", "expected an object");
  ParameterSet p;
  if (const auto it = j.find("arrival"); it != j.end()) p.arrival = arrival_from_json(*it);
  if (const auto it = j.find("activities"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) bad("activities", "expected an object keyed by activity");
    for (const auto& [name, a] : it->items()) {
      if (a.is_null()) continue;
      const std::string f = "activities." + name;
      if (!a.is_object()) bad(f, "expected an object");
      ActivityProfile prof;
      prof.activity = name;
      if (const auto x = a.find("mean_duration"); x != a.end()) prof.mean_duration = number(*x, f + ".mean_duration");
      if (const auto x = a.find("std_duration"); x != a.end()) prof.std_duration = number(*x, f + ".std_duration");
      if (const auto x = a.find("capacity"); x != a.end()) prof.capacity = static_cast<int>(integer(*x, f + ".capacity"));
      if (const auto x = a.find("resources"); x != a.end() && !x->is_null()) {
        prof.resources = get_as<std::set<std::string>>(*x, f + ".resources");
      }
      if (const auto x = a.find("mean_waiting"); x != a.end()) prof.mean_waiting = number(*x, f + ".mean_waiting");
      p.activities[name] = std::move(prof);
    }
  }
  if (const auto it = j.find("handover"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("handover", "expected a list of {from, to, count}");
    for (const Json& h : *it) {
      const auto from = get_as<std::string>(require(h, "from"), "handover.from");
      const auto to = get_as<std::string>(require(h, "to"), "handover.to");
      p.handover.counts[{from, to}] += count(require(h, "count"), "handover.count");
    }
  }
  if (const auto it = j.find("calendar"); it != j.end() && !it->is_null()) p.calendar = calendar_from_json(*it);
  if (const auto it = j.find("process_capacity"); it != j.end() && !it->is_null()) {
    p.process_capacity = count(*it, "process_capacity");
  }
  return p;
}

Json to_json(const SimConfig& c) {
  Json windows = Json::array();
  for (const auto& w : c.interrupt_process) {
    windows.push_back(Json{{"from", format_timestamp(w.from)}, {"to", format_timestamp(w.to)}});
  }
  Json j{{"num_cases", c.num_cases},
         {"start_time", format_timestamp(c.start_time)},
         {"seed", c.seed},
         {"interrupt_activity", c.interrupt_activity},
         {"interrupt_case", c.interrupt_case},
         {"interrupt_process", std::move(windows)}};
  j["process_capacity_override"] =
      c.process_capacity_override ? Json(*c.process_capacity_override) : Json(nullptr);
  j["calendar_override"] = c.calendar_override ? to_json(*c.calendar_override) : Json(nullptr);
  j["arrival_override"] = c.arrival_override ? to_json(*c.arrival_override) : Json(nullptr);
  return j;
}

SimConfig sim_config_from_json(const Json& j) {
  SimConfig c;
  c.num_cases = count(require(j, "num_cases"), "num_cases");
  c.start_time = timestamp(require(j, "start_time"), "start_time");
  const Json& seed = require(j, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    bad("seed", "expected a non-negative integer");
  }
  c.seed = seed.get<std::uint64_t>();
  if (const auto it = j.find("interrupt_activity"); it != j.end()) c.interrupt_activity = boolean(*it, "interrupt_activity");
  if (const auto it = j.find("interrupt_case"); it != j.end()) c.interrupt_case = boolean(*it, "interrupt_case");
  if (const auto it = j.find("interrupt_process"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("interrupt_process", "expected a list of {from, to}");
    for (const Json& w : *it) {
      c.interrupt_process.push_back(
          {timestamp(require(w, "from"), "interrupt_process.from"), timestamp(require(w, "to"), "interrupt_process.to")});
    }
  }
  if (const auto it = j.find("process_capacity_override"); it != j.end() && !it->is_null()) {
    c.process_capacity_override = count(*it, "process_capacity_override");
  }
  if (const auto it = j.find("calendar_override"); it != j.end() && !it->is_null()) {
    c.calendar_override = calendar_from_json(*it);
  }
  if (const auto it = j.find("arrival_override"); it != j.end() && !it->is_null()) {
    c.arrival_override = arrival_from_json(*it);
  }
  return c;
}

Json to_json(const ColumnMapping& m) {
  Json j{{"case_id", m.case_id}, {"activity", m.activity}, {"end_time", m.end_time}};
  j["start_time"] = m.start_time ? Json(*m.start_time) : Json(nullptr);
  j["resource"] = m.resource ? Json(*m.resource) : Json(nullptr);
  return j;
}

ColumnMapping mapping_from_json(const Json& j) {
  if (!j.is_object()) bad("mapping", "expected an object");
  ColumnMapping m;
  const auto text = [&](const char* key, std::string& out) {
    if (const auto it = j.find(key); it != j.end()) out = get_as<std::string>(*it, std::string("mapping.") + key);
  };
  const auto optional = [&](const char* key, std::optional<std::string>& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (it->is_null()) {
      out.reset();
    } else {
      out = get_as<std::string>(*it, std::string("mapping.") + key);
    }
  };
  text("case_id", m.case_id);
  text("activity", m.activity);
  text("end_time", m.end_time);
  optional("start_time", m.start_time);
  optional("resource", m.resource);
  return m;
}

Json to_json(const KpiReport& k) {
  Json activities = Json::object();
  for (const auto& [name, a] : k.activities) {
    activities[name] = Json{{"executions", a.executions},         {"mean_waiting", a.mean_waiting},
                            {"max_waiting", a.max_waiting},       {"mean_service", a.mean_service},
                            {"mean_queue_length", a.mean_queue_length}, {"max_queue_length", a.max_queue_length}};
  }
  Json cases = Json::array();
  for (const auto& c : k.cases) cases.push_back(Json{{"case_id", c.case_id}, {"sojourn", c.sojourn}, {"waiting", c.waiting}});
  return Json{{"empty", k.empty},
              {"mean_sojourn", k.mean_sojourn},
              {"max_sojourn", k.max_sojourn},
              {"activities", std::move(activities)},
              {"cases", std::move(cases)}};
}

Json to_json(const Variant& v) { return Json{{"sequence", v.sequence}, {"count", v.count}}; }

Json to_json(const EmdReport& r) {
  Json v1 = Json::array(), v2 = Json::array(), flow = Json::array();
  for (const auto& v : r.variants1) v1.push_back(to_json(v));
  for (const auto& v : r.variants2) v2.push_back(to_json(v));
  for (const auto& f : r.flow) flow.push_back(Json{{"i", f.from}, {"j", f.to}, {"mass", f.mass}, {"cost", f.cost}});
  return Json{{"distance", r.distance}, {"variants1", std::move(v1)}, {"variants2", std::move(v2)}, {"flow", std::move(flow)}};
}

}  // namespace ptsim
