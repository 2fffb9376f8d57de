#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ptsim/error.hpp"
#include "ptsim/eventlog.hpp"
#include "ptsim/json_io.hpp"

namespace ptsim::service {

/// A library error tagged with the HTTP status the API reports for it.
class ApiError : public Error {
 public:
  ApiError(int status, const Error& cause) : Error(cause), status_(status) {}
  ApiError(int status, ErrorCode code, const std::string& message, std::string detail = {})
      : Error(code, message, std::move(detail)), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// `{code, message, detail}`.
Json error_body(const Error& e);

enum class RunStatus { Queued, Running, Done, Failed };
std::string_view to_string(RunStatus s);

struct WorkbenchOptions {
  std::filesystem::path root;
  std::size_t workers = 2;
};

// The what-if loop behind the HTTP API: projects hold a source log, the
// discovered and current trees and parameter overrides; runs simulate a
// snapshot of a project on a FIFO worker pool. Everything is persisted under
// `root` with write-then-rename, so a restart sees only complete files.
// Methods are safe to call concurrently; writes to one project are serialized.
//
// Layout:
//   root/projects/<id>/ source.csv mapping.json discovered.json tree.json
//                       mined_params.json overrides.json state.json
//   root/runs/<id>/     meta.json config.json tree.json params.json
//                       log.csv interruptions.csv kpis.json emd.json
// New project and run directories are assembled under root/tmp and renamed
// into place.
class Workbench {
 public:
  explicit Workbench(WorkbenchOptions options);
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  /// Parses, discovers, annotates and mines. Errors are 422.
  Json create_project(const std::string& csv, const ColumnMapping& mapping = {});
  Json get_project(const std::string& id) const;

  /// Body is a TreeEdit JSON or `{"op": "reset"}`. Structural edits re-mine
  /// every annotation from the source log; set_xor_weights and set_max_redo
  /// are kept as given.
  Json edit_tree(const std::string& id, const Json& body);

  /// Body is a JSON merge patch on the parameter document, optionally with
  /// `"reset": true` (drop all overrides first) and `"xor_weights": [{node,
  /// weights}]` for branch probabilities of the current tree.
  Json update_params(const std::string& id, const Json& body);

  /// Body is a SimConfig JSON. Returns the queued run (202 semantics).
  Json start_run(const std::string& project_id, const Json& config);
  Json get_run(const std::string& id) const;
  std::string run_log_csv(const std::string& id) const;
  /// EMD between the run's log and the project's source log; 409 before done.
  Json compare(const std::string& id);

  /// Blocks until no run is queued or running.
  void wait_idle();
  /// Stops accepting work, lets running simulations finish and joins the
  /// workers. Runs still queued are left queued on disk and are marked failed
  /// on the next start.
  void shutdown();

 private:
  struct Project;
  struct Run;

  std::shared_ptr<Project> project(const std::string& id) const;
  std::shared_ptr<Run> run(const std::string& id) const;
  void load();
  void worker();
  void execute(Run& r);
  void set_status(Run& r, RunStatus s, const std::string& error = {});
  Json project_json(const Project& p) const;
  Json run_json(const Run& r) const;
  std::filesystem::path staging_dir(const std::string& id) const;

  WorkbenchOptions options_;
  mutable std::mutex mu_;  // guards the maps, the queue and the counters
  std::map<std::string, std::shared_ptr<Project>> projects_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
  std::deque<std::shared_ptr<Run>> queue_;
  std::size_t busy_ = 0;
  bool stopping_ = false;
  std::uint64_t run_seq_ = 0;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::vector<std::thread> workers_;
};

}  // namespace ptsim::service
