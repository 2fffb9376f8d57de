#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <ptsim/discovery.hpp>
#include <ptsim/emd.hpp>
#include <ptsim/error.hpp>
#include <ptsim/eventlog.hpp>
#include <ptsim/json_io.hpp>
#include <ptsim/params.hpp>
#include <ptsim/ptree.hpp>
#include <ptsim/service/http_server.hpp>
#include <ptsim/service/workbench.hpp>
#include <ptsim/simengine.hpp>
#include <ptsim/time.hpp>

using namespace ptsim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::optional<std::string>& path, const std::string& content) {
  if (!path || *path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", *path);
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "malformed JSON document", what + ": " + e.what());
  }
}

// Grammar text, or the JSON form when the file starts with '{'.
ProcessTree load_tree(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  ProcessTree tree = first != std::string::npos && text[first] == '{' ? tree_from_json(parse_json(text, path))
                                                                      : parse_tree(text);
  require_valid(tree);
  return tree;
}

Timestamp timestamp_arg(const std::string& text, const std::string& flag) {
  const auto t = parse_timestamp(text);
  if (!t) throw Error(ErrorCode::InvalidArgument, "bad timestamp", flag + " '" + text + "'");
  return *t;
}

struct MappingFlags {
  ColumnMapping m;
  std::string start;
  std::string resource;
  bool no_start = false;
  bool no_resource = false;

  void add(CLI::App& cmd) {
    cmd.add_option("--case-col", m.case_id, "Case id column")->capture_default_str();
    cmd.add_option("--activity-col", m.activity, "Activity column")->capture_default_str();
    cmd.add_option("--end-col", m.end_time, "Completion timestamp column")->capture_default_str();
    cmd.add_option("--start-col", start, "Start timestamp column (default start_timestamp)");
    cmd.add_option("--resource-col", resource, "Resource column (default org:resource)");
  }
  ColumnMapping mapping() const {
    ColumnMapping out = m;
    if (!start.empty()) out.start_time = start;
    if (!resource.empty()) out.resource = resource;
    return out;
  }
};

int run_discover(const std::string& log_path, const MappingFlags& flags, const std::optional<std::string>& tree_out,
                 const std::optional<std::string>& params_out, bool as_json) {
  const EventLog log = parse_csv_string(read_file(log_path), flags.mapping());
  const auto report = annotate_with_report(discover_tree(log), log);
  const auto mined = mine_parameters(log);
  for (const auto& w : mined.warnings) std::cerr << "warning: " << w << "\n";
  write_output(tree_out, as_json ? to_json(report.tree).dump(2) + "\n" : render_tree(report.tree) + "\n");
  if (params_out) write_output(params_out, to_json(mined.params).dump(2) + "\n");
  return 0;
}

struct SimulateFlags {
  std::string tree;
  std::string params;
  std::size_t cases = 0;
  std::uint64_t seed = 0;
  std::string start;
  bool interrupt_activity = false;
  bool interrupt_case = false;
  std::vector<std::string> pauses;
  std::optional<std::string> log_out;
  std::optional<std::string> kpis_out;
  std::optional<std::string> interruptions_out;
};

int run_simulate(const SimulateFlags& f) {
  const ProcessTree tree = load_tree(f.tree);
  const ParameterSet params = params_from_json(parse_json(read_file(f.params), f.params));
  validate_parameters(params);
  if (f.cases == 0) throw Error(ErrorCode::InvalidArgument, "--cases must be positive");
  SimConfig config;
  config.num_cases = f.cases;
  config.seed = f.seed;
  config.start_time = timestamp_arg(f.start, "--start");
  config.interrupt_activity = f.interrupt_activity;
  config.interrupt_case = f.interrupt_case;
  for (const auto& p : f.pauses) {
    const auto slash = p.find('/');
    if (slash == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--pause expects FROM/TO", p);
    config.interrupt_process.push_back(
        {timestamp_arg(p.substr(0, slash), "--pause"), timestamp_arg(p.substr(slash + 1), "--pause")});
  }
  const SimResult result = simulate(tree, params, config);
  write_output(f.log_out, write_csv_string(result.log));
  if (f.kpis_out) write_output(f.kpis_out, to_json(result.kpis).dump(2) + "\n");
  if (f.interruptions_out) {
    std::ostringstream ss;
    write_interruptions_csv(result.interruptions, ss);
    write_output(f.interruptions_out, ss.str());
  }
  if (result.truncated_cases > 0) std::cerr << "warning: " << result.truncated_cases << " cases truncated\n";
  if (result.empty_cases > 0) std::cerr << "note: " << result.empty_cases << " cases produced no events\n";
  return 0;
}

int run_compare(const std::string& a, const std::string& b, const MappingFlags& flags) {
  const EventLog l1 = parse_csv_string(read_file(a), flags.mapping());
  const EventLog l2 = parse_csv_string(read_file(b), flags.mapping());
  std::cout << to_json(emd(l1, l2)).dump(2) << "\n";
  return 0;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

int run_serve(const std::string& addr, const std::string& root, std::size_t workers) {
  const auto [host, port] = service::parse_address(addr);
  if (workers == 0) throw Error(ErrorCode::InvalidArgument, "--workers must be positive");

  // Block the termination signals before any thread starts so only the
  // waiter below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Workbench workbench({root, workers});
  service::HttpServer server(workbench);
  const int bound = server.bind(host, port);
  std::cerr << "listening on " << host << ":" << bound << ", root " << root << "\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "signal " << sig << ", shutting down\n";
    server.stop();
  });
  server.listen();
  // listen() can also return on its own; wake the waiter so it can be joined.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  workbench.shutdown();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process-tree discovery, simulation and log comparison"};
  app.require_subcommand(1);

  MappingFlags discover_map;
  std::string discover_log;
  std::optional<std::string> tree_out, params_out;
  bool as_json = false;
  auto* discover = app.add_subcommand("discover", "Discover an annotated tree and mine parameters from a CSV log");
  discover->add_option("LOG", discover_log, "Event log CSV")->required();
  discover->add_option("--tree-out", tree_out, "Tree output file (default stdout)");
  discover->add_option("--params-out", params_out, "Parameter JSON output file");
  discover->add_flag("--json", as_json, "Write the tree in its JSON form");
  discover_map.add(*discover);

  SimulateFlags sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a tree with a parameter set");
  simulate_cmd->add_option("TREE", sim.tree, "Tree file, grammar text or JSON")->required();
  simulate_cmd->add_option("PARAMS", sim.params, "Parameter JSON file")->required();
  simulate_cmd->add_option("--cases", sim.cases, "Number of cases")->required();
  simulate_cmd->add_option("--seed", sim.seed, "Random seed")->required();
  simulate_cmd->add_option("--start", sim.start, "Start time, ISO-8601 UTC")->required();
  simulate_cmd->add_flag("--interrupt-activity", sim.interrupt_activity, "Pause running activities at calendar close");
  simulate_cmd->add_flag("--interrupt-case", sim.interrupt_case, "Freeze open cases at calendar close");
  simulate_cmd->add_option("--pause", sim.pauses, "Process pause window FROM/TO (repeatable)");
  simulate_cmd->add_option("--log-out", sim.log_out, "Log CSV output file (default stdout)");
  simulate_cmd->add_option("--kpis-out", sim.kpis_out, "KPI JSON output file");
  simulate_cmd->add_option("--interruptions-out", sim.interruptions_out, "Interruption CSV output file");

  MappingFlags compare_map;
  std::string log_a, log_b;
  auto* compare = app.add_subcommand("compare", "Earth mover's distance between two logs, JSON on stdout");
  compare->add_option("LOG1", log_a, "First log CSV")->required();
  compare->add_option("LOG2", log_b, "Second log CSV")->required();
  compare_map.add(*compare);

  std::string addr = env_or("PTSIM_ADDR", "127.0.0.1:8080");
  std::string root = env_or("PTSIM_ROOT", "ptsim-data");
  std::size_t workers = 2;
  const std::string workers_env = env_or("PTSIM_WORKERS", "");
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", addr, "Listen address host:port (env PTSIM_ADDR)")->capture_default_str();
  serve->add_option("--root", root, "Data directory (env PTSIM_ROOT)")->capture_default_str();
  auto* workers_opt = serve->add_option("--workers", workers, "Simulation worker threads (env PTSIM_WORKERS)")
                          ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*discover) return run_discover(discover_log, discover_map, tree_out, params_out, as_json);
    if (*simulate_cmd) return run_simulate(sim);
    if (*compare) return run_compare(log_a, log_b, compare_map);
    if (*serve) {
      if (workers_opt->count() == 0 && !workers_env.empty()) {
        try {
          workers = std::stoul(workers_env);
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidArgument, "bad PTSIM_WORKERS", workers_env);
        }
      }
      return run_serve(addr, root, workers);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
