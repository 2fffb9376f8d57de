#include "ptsim/service/workbench.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "ptsim/discovery.hpp"
#include "ptsim/params.hpp"
#include "ptsim/simengine.hpp"

namespace ptsim::service {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }
Json read_json(const fs::path& path) { return Json::parse(read_file(path)); }

std::string random_id(char prefix) {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  std::ostringstream ss;
  ss << prefix << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << gen();
  return ss.str();
}

[[noreturn]] void not_found(const std::string& what, const std::string& id) {
  throw ApiError(404, ErrorCode::NotFound, what + " not found", id);
}

int edit_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadNodeId:
      return 404;
    case ErrorCode::InvalidArgument:
    case ErrorCode::SyntaxError:
    case ErrorCode::WeightError:
      return 422;
    default:
      return 409;
  }
}

ParameterSet effective_params(const ParameterSet& mined, const std::vector<Json>& overrides) {
  Json doc = to_json(mined);
  for (const Json& patch : overrides) doc.merge_patch(patch);
  ParameterSet p = params_from_json(doc);
  validate_parameters(p);
  return p;
}

std::optional<RunStatus> status_from_string(const std::string& s) {
  for (auto st : {RunStatus::Queued, RunStatus::Running, RunStatus::Done, RunStatus::Failed}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::vector<std::string> annotation_warnings(const AnnotationReport& report) {
  std::vector<std::string> out;
  for (const auto& id : report.unobserved_xors) {
    out.push_back("choice at " + ptsim::to_string(id) + " is not observed in the source log; branches are uniform");
  }
  for (const auto& id : report.unobserved_loops) {
    out.push_back("loop at " + ptsim::to_string(id) + " is not observed in the source log; default redo bounds apply");
  }
  if (report.skipped_traces > 0) {
    out.push_back(std::to_string(report.skipped_traces) + " source traces do not fit the tree and were skipped");
  }
  return out;
}

}  // namespace

Json error_body(const Error& e) {
  return Json{{"code", std::string(ptsim::to_string(e.code()))}, {"message", e.what()}, {"detail", e.detail()}};
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Queued:
      return "queued";
    case RunStatus::Running:
      return "running";
    case RunStatus::Done:
      return "done";
    case RunStatus::Failed:
      return "failed";
  }
  return "failed";
}

struct Workbench::Project {
  std::string id;
  fs::path dir;
  mutable std::mutex mu;  // single writer per project
  ColumnMapping mapping;
  EventLog log;  // immutable after creation
  ProcessTree discovered;
  ProcessTree tree;
  ParameterSet mined;
  std::vector<std::string> mining_warnings;
  std::vector<std::string> tree_warnings;
  std::vector<Json> overrides;
  ParameterSet params;  // mined with overrides applied

  void save_tree() const {
    write_json(dir / "tree.json", to_json(tree));
    save_state();
  }
  void save_state() const {
    write_json(dir / "state.json", Json{{"mining_warnings", mining_warnings}, {"tree_warnings", tree_warnings}});
  }
};

struct Workbench::Run {
  std::string id;
  std::string project_id;
  fs::path dir;
  std::uint64_t seq = 0;
  Json config_json;
  SimConfig config;
  ProcessTree tree;
  ParameterSet params;
  // guarded by Workbench::mu_
  RunStatus status = RunStatus::Queued;
  std::string error;
  Json result;

  std::mutex emd_mu;
  std::optional<Json> emd;
};

Workbench::Workbench(WorkbenchOptions options) : options_(std::move(options)) {
  if (options_.workers == 0) throw Error(ErrorCode::InvalidArgument, "worker count must be positive");
  fs::create_directories(options_.root / "projects");
  fs::create_directories(options_.root / "runs");
  fs::remove_all(options_.root / "tmp");
  fs::create_directories(options_.root / "tmp");
  load();
  for (std::size_t i = 0; i < options_.workers; ++i) workers_.emplace_back([this] { worker(); });
}

Workbench::~Workbench() { shutdown(); }

fs::path Workbench::staging_dir(const std::string& id) const {
  const fs::path dir = options_.root / "tmp" / id;
  fs::create_directories(dir);
  return dir;
}

void Workbench::load() {
  for (const auto& entry : fs::directory_iterator(options_.root / "projects")) {
    if (!entry.is_directory()) continue;
    auto p = std::make_shared<Project>();
    p->id = entry.path().filename().string();
    p->dir = entry.path();
    p->mapping = mapping_from_json(read_json(p->dir / "mapping.json"));
    p->log = parse_csv_string(read_file(p->dir / "source.csv"), p->mapping);
    p->discovered = tree_from_json(read_json(p->dir / "discovered.json"));
    p->tree = tree_from_json(read_json(p->dir / "tree.json"));
    p->mined = params_from_json(read_json(p->dir / "mined_params.json"));
    for (const Json& o : read_json(p->dir / "overrides.json")) p->overrides.push_back(o);
    const Json state = read_json(p->dir / "state.json");
    p->mining_warnings = state.value("mining_warnings", std::vector<std::string>{});
    p->tree_warnings = state.value("tree_warnings", std::vector<std::string>{});
    p->params = effective_params(p->mined, p->overrides);
    projects_[p->id] = std::move(p);
  }
  for (const auto& entry : fs::directory_iterator(options_.root / "runs")) {
    if (!entry.is_directory()) continue;
    auto r = std::make_shared<Run>();
    r->id = entry.path().filename().string();
    r->dir = entry.path();
    const Json meta = read_json(r->dir / "meta.json");
    r->project_id = meta.at("project").get<std::string>();
    r->seq = meta.at("seq").get<std::uint64_t>();
    r->status = status_from_string(meta.at("status").get<std::string>()).value_or(RunStatus::Failed);
    r->error = meta.value("error", std::string{});
    r->config_json = read_json(r->dir / "config.json");
    run_seq_ = std::max(run_seq_, r->seq);
    if (r->status == RunStatus::Queued || r->status == RunStatus::Running) {
      set_status(*r, RunStatus::Failed, "interrupted by shutdown");
    } else if (r->status == RunStatus::Done) {
      r->result = read_json(r->dir / "kpis.json");
      if (fs::exists(r->dir / "emd.json")) r->emd = read_json(r->dir / "emd.json");
    }
    runs_[r->id] = std::move(r);
  }
}

std::shared_ptr<Workbench::Project> Workbench::project(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = projects_.find(id);
  if (it == projects_.end()) not_found("project", id);
  return it->second;
}

std::shared_ptr<Workbench::Run> Workbench::run(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = runs_.find(id);
  if (it == runs_.end()) not_found("run", id);
  return it->second;
}

Json Workbench::project_json(const Project& p) const {
  Json runs = Json::array();
  {
    std::lock_guard lock(mu_);
    std::vector<const Run*> mine;
    for (const auto& [id, r] : runs_) {
      if (r->project_id == p.id) mine.push_back(r.get());
    }
    std::sort(mine.begin(), mine.end(), [](const Run* a, const Run* b) { return a->seq < b->seq; });
    for (const Run* r : mine) runs.push_back(Json{{"id", r->id}, {"status", std::string(to_string(r->status))}});
  }
  std::vector<std::string> warnings = p.mining_warnings;
  warnings.insert(warnings.end(), p.tree_warnings.begin(), p.tree_warnings.end());
  return Json{{"id", p.id},
              {"source", Json{{"cases", p.log.size()},
                              {"events", p.log.event_count()},
                              {"activities", p.log.alphabet()},
                              {"resources", p.log.resources()},
                              {"mapping", to_json(p.mapping)}}},
              {"discovered_tree", to_json(p.discovered)},
              {"discovered_tree_text", render_tree(p.discovered)},
              {"tree", to_json(p.tree)},
              {"tree_text", render_tree(p.tree)},
              {"mined_params", to_json(p.mined)},
              {"overrides", p.overrides},
              {"params", to_json(p.params)},
              {"warnings", warnings},
              {"runs", std::move(runs)}};
}

Json Workbench::create_project(const std::string& csv, const ColumnMapping& mapping) {
  auto p = std::make_shared<Project>();
  try {
    p->log = parse_csv_string(csv, mapping);
    const auto report = annotate_with_report(discover_tree(p->log), p->log);
    p->discovered = report.tree;
    auto mined = mine_parameters(p->log);
    p->mined = std::move(mined.params);
    p->mining_warnings = std::move(mined.warnings);
    p->tree_warnings = annotation_warnings(report);
  } catch (const Error& e) {
    throw ApiError(422, e);
  }
  p->mapping = mapping;
  p->tree = p->discovered;
  p->params = p->mined;
  {
    std::lock_guard lock(mu_);
    do {
      p->id = random_id('p');
    } while (projects_.count(p->id));
  }
  const fs::path stage = staging_dir(p->id);
  write_file(stage / "source.csv", csv);
  write_json(stage / "mapping.json", to_json(mapping));
  write_json(stage / "discovered.json", to_json(p->discovered));
  write_json(stage / "mined_params.json", to_json(p->mined));
  write_json(stage / "overrides.json", Json::array());
  p->dir = stage;
  p->save_tree();
  p->dir = options_.root / "projects" / p->id;
  fs::rename(stage, p->dir);
  {
    std::lock_guard lock(mu_);
    projects_[p->id] = p;
  }
  std::lock_guard lock(p->mu);
  return project_json(*p);
}

Json Workbench::get_project(const std::string& id) const {
  const auto p = project(id);
  std::lock_guard lock(p->mu);
  return project_json(*p);
}

Json Workbench::edit_tree(const std::string& id, const Json& body) {
  const auto p = project(id);
  std::lock_guard lock(p->mu);
  if (body.is_object() && body.value("op", std::string{}) == "reset") {
    p->tree = p->discovered;
    p->tree_warnings.clear();
    p->save_tree();
    return project_json(*p);
  }
  TreeEdit e;
  ProcessTree edited;
  std::vector<std::string> warnings;
  try {
    e = tree_edit_from_json(body);
    edited = apply_edit(p->tree, e);
  } catch (const Error& err) {
    throw ApiError(edit_status(err.code()), err);
  }
  const bool structural =
      !std::holds_alternative<edit::SetXorWeights>(e) && !std::holds_alternative<edit::SetMaxRedo>(e);
  if (structural) {
    try {
      auto report = annotate_with_report(edited, p->log);
      edited = std::move(report.tree);
      warnings = annotation_warnings(report);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NoReplayableTraces) throw ApiError(409, err);
      warnings.push_back("no source trace fits the edited tree; annotations were not re-mined");
    }
  } else {
    warnings = p->tree_warnings;
  }
  try {
    require_valid(edited);
  } catch (const Error& err) {
    throw ApiError(409, err);
  }
  p->tree = std::move(edited);
  p->tree_warnings = std::move(warnings);
  p->save_tree();
  return project_json(*p);
}

Json Workbench::update_params(const std::string& id, const Json& body) {
  const auto p = project(id);
  std::lock_guard lock(p->mu);
  if (!body.is_object()) {
    throw ApiError(422, ErrorCode::InvalidArgument, "malformed JSON document", "params: expected an object");
  }
  Json patch = body;
  std::vector<Json> overrides = p->overrides;
  ProcessTree tree = p->tree;
  bool tree_changed = false;
  try {
    if (const auto it = patch.find("reset"); it != patch.end()) {
      if (!it->is_boolean()) throw Error(ErrorCode::InvalidArgument, "malformed JSON document", "reset: expected true or false");
      if (it->get<bool>()) overrides.clear();
      patch.erase(it);
    }
    if (const auto it = patch.find("xor_weights"); it != patch.end()) {
      if (!it->is_array()) {
        throw Error(ErrorCode::InvalidArgument, "malformed JSON document", "xor_weights: expected a list of {node, weights}");
      }
      for (const Json& w : *it) {
        Json edit_doc = w;
        edit_doc["op"] = "set_xor_weights";
        tree = apply_edit(tree, tree_edit_from_json(edit_doc));
      }
      tree_changed = true;
      patch.erase(it);
    }
    if (!patch.empty()) overrides.push_back(patch);
    p->params = effective_params(p->mined, overrides);
  } catch (const Error& err) {
    throw ApiError(err.code() == ErrorCode::BadNodeId ? 404 : 422, err);
  }
  p->overrides = std::move(overrides);
  write_json(p->dir / "overrides.json", p->overrides);
  if (tree_changed) {
    p->tree = std::move(tree);
    p->save_tree();
  }
  return project_json(*p);
}

Json Workbench::start_run(const std::string& project_id, const Json& config) {
  const auto p = project(project_id);
  auto r = std::make_shared<Run>();
  try {
    r->config = sim_config_from_json(config);
    if (r->config.num_cases == 0) throw Error(ErrorCode::InvalidArgument, "num_cases must be positive", "num_cases: 0");
  } catch (const Error& e) {
    throw ApiError(422, e);
  }
  r->config_json = to_json(r->config);
  r->project_id = project_id;
  {
    std::lock_guard lock(p->mu);
    r->tree = p->tree;
    r->params = p->params;
  }
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw ApiError(503, ErrorCode::Conflict, "service is shutting down");
    do {
      r->id = random_id('r');
    } while (runs_.count(r->id));
    r->seq = ++run_seq_;
  }
  const fs::path stage = staging_dir(r->id);
  write_json(stage / "config.json", r->config_json);
  write_json(stage / "tree.json", to_json(r->tree));
  write_json(stage / "params.json", to_json(r->params));
  write_json(stage / "meta.json", Json{{"id", r->id}, {"project", r->project_id}, {"seq", r->seq}, {"status", "queued"}});
  r->dir = options_.root / "runs" / r->id;
  fs::rename(stage, r->dir);

  std::lock_guard lock(mu_);
  if (stopping_) {
    r->status = RunStatus::Failed;
    r->error = "interrupted by shutdown";
  } else {
    queue_.push_back(r);
  }
  runs_[r->id] = r;
  Json j = run_json(*r);
  work_cv_.notify_one();
  return j;
}

Json Workbench::run_json(const Run& r) const {
  Json j{{"id", r.id},
         {"project", r.project_id},
         {"seq", r.seq},
         {"status", std::string(to_string(r.status))},
         {"config", r.config_json}};
  if (r.status == RunStatus::Failed) j["error"] = r.error;
  if (r.status == RunStatus::Done) {
    j["kpis"] = r.result.at("kpis");
    j["summary"] = r.result.at("summary");
  }
  return j;
}

Json Workbench::get_run(const std::string& id) const {
  const auto r = run(id);
  Json j;
  {
    std::lock_guard lock(mu_);
    j = run_json(*r);
  }
  std::lock_guard lock(r->emd_mu);
  if (r->emd) j["emd"] = r->emd->at("distance");
  return j;
}

std::string Workbench::run_log_csv(const std::string& id) const {
  const auto r = run(id);
  {
    std::lock_guard lock(mu_);
    if (r->status != RunStatus::Done) {
      throw ApiError(409, ErrorCode::Conflict, "run has no log yet", std::string(to_string(r->status)));
    }
  }
  return read_file(r->dir / "log.csv");
}

Json Workbench::compare(const std::string& id) {
  const auto r = run(id);
  {
    std::lock_guard lock(mu_);
    if (r->status != RunStatus::Done) {
      throw ApiError(409, ErrorCode::Conflict, "run is not done", std::string(to_string(r->status)));
    }
  }
  std::lock_guard lock(r->emd_mu);
  if (!r->emd) {
    const auto p = project(r->project_id);
    Json j;
    try {
      j = to_json(emd(p->log, parse_csv_string(read_file(r->dir / "log.csv"))));
    } catch (const Error& e) {
      throw ApiError(422, e);
    }
    j["run"] = r->id;
    j["project"] = r->project_id;
    write_json(r->dir / "emd.json", j);
    r->emd = std::move(j);
  }
  return *r->emd;
}

void Workbench::set_status(Run& r, RunStatus s, const std::string& error) {
  r.status = s;
  r.error = error;
  Json meta{{"id", r.id}, {"project", r.project_id}, {"seq", r.seq}, {"status", std::string(to_string(s))}};
  if (s == RunStatus::Failed) meta["error"] = error;
  write_json(r.dir / "meta.json", meta);
}

void Workbench::execute(Run& r) {
  {
    std::lock_guard lock(mu_);
    set_status(r, RunStatus::Running);
  }
  std::string error;
  Json result;
  try {
    const SimResult res = simulate(r.tree, r.params, r.config);
    write_file(r.dir / "log.csv", write_csv_string(res.log));
    std::ostringstream interruptions;
    write_interruptions_csv(res.interruptions, interruptions);
    write_file(r.dir / "interruptions.csv", interruptions.str());
    result = Json{{"kpis", to_json(res.kpis)},
                  {"summary", Json{{"cases", res.cases.size()},
                                   {"traces", res.log.size()},
                                   {"events", res.log.event_count()},
                                   {"truncated_cases", res.truncated_cases},
                                   {"empty_cases", res.empty_cases},
                                   {"interruptions", res.interruptions.size()}}}};
    write_json(r.dir / "kpis.json", result);
  } catch (const Error& e) {
    error = std::string(ptsim::to_string(e.code())) + ": " + e.what() + (e.detail().empty() ? "" : " (" + e.detail() + ")");
  } catch (const std::exception& e) {
    error = e.what();
  }
  std::lock_guard lock(mu_);
  if (error.empty()) {
    r.result = std::move(result);
    set_status(r, RunStatus::Done);
  } else {
    set_status(r, RunStatus::Failed, error);
  }
}

void Workbench::worker() {
  for (;;) {
    std::shared_ptr<Run> r;
    {
      std::unique_lock lock(mu_);
      work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      r = std::move(queue_.front());
      queue_.pop_front();
      ++busy_;
    }
    execute(*r);
    {
      std::lock_guard lock(mu_);
      --busy_;
    }
    idle_cv_.notify_all();
  }
}

void Workbench::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return busy_ == 0 && (queue_.empty() || stopping_); });
}

void Workbench::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_ && workers_.empty()) return;
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  workers_.clear();
  idle_cv_.notify_all();
}

}  // namespace ptsim::service
