#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <ptsim/service/workbench.hpp>
#include <ptsim/simengine.hpp>

#include "oracles.hpp"

using namespace ptsim;
using namespace ptsim::service;
namespace fs = std::filesystem;

namespace {

std::string data_file(const std::string& name) {
  std::ifstream in(std::string(PTSIM_DATA_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSample =
    "case:concept:name,concept:name,time:timestamp\n"
    "c1,a,2024-01-01T09:00:00Z\n"
    "c1,b,2024-01-01T09:10:00Z\n"
    "c1,c,2024-01-01T09:20:00Z\n";

class WorkbenchTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fs::temp_directory_path() /
           ("ptsim_wb_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root);
  }
  void TearDown() override { fs::remove_all(root); }

  std::unique_ptr<Workbench> open(std::size_t workers = 2) {
    return std::make_unique<Workbench>(WorkbenchOptions{root, workers});
  }

  fs::path root;
};

int status_of(const std::function<void()>& fn, ErrorCode* code = nullptr) {
  try {
    fn();
  } catch (const ApiError& e) {
    if (code) *code = e.code();
    return e.status();
  }
  return 0;
}

Json config(std::size_t cases, std::uint64_t seed = 1) {
  return Json{{"num_cases", cases}, {"seed", seed}, {"start_time", "2024-01-01T08:00:00Z"}};
}

Json wait_done(Workbench& wb, const std::string& run_id) {
  wb.wait_idle();
  return wb.get_run(run_id);
}

bool has_tmp_files(const fs::path& root) {
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() == ".tmp") return true;
  }
  return false;
}

}  // namespace

TEST_F(WorkbenchTest, CreateProjectFromThreeRows) {
  auto wb = open();
  const Json p = wb->create_project(kSample);
  EXPECT_EQ(p["tree_text"], "->(a, b, c){max_trace_length=3}");
  EXPECT_EQ(p["source"]["cases"], 1);
  EXPECT_EQ(p["params"], p["mined_params"]);
  EXPECT_TRUE(p["overrides"].empty());
  EXPECT_EQ(wb->get_project(p["id"]), p);
}

TEST_F(WorkbenchTest, BadMappingIs422MissingColumn) {
  auto wb = open();
  ColumnMapping m;
  m.case_id = "Case";
  ErrorCode code{};
  EXPECT_EQ(status_of([&] { wb->create_project(kSample, m); }, &code), 422);
  EXPECT_EQ(code, ErrorCode::MissingColumn);
  EXPECT_EQ(status_of([&] { wb->create_project("case:concept:name,concept:name,time:timestamp\n"); }, &code), 422);
  EXPECT_EQ(code, ErrorCode::EmptyLog);
}

TEST_F(WorkbenchTest, DuplicateUploadGivesIndependentProjects) {
  auto wb = open();
  const Json a = wb->create_project(kSample);
  const Json b = wb->create_project(kSample);
  EXPECT_NE(a["id"], b["id"]);
  wb->edit_tree(a["id"], Json{{"op", "swap_children"}, {"node", Json::array()}, {"first", 0}, {"second", 1}});
  EXPECT_EQ(wb->get_project(b["id"])["tree"], b["tree"]);
}

TEST_F(WorkbenchTest, SkipEditTurnsChoiceIntoSequence) {
  auto wb = open();
  const Json p = wb->create_project(data_file("loan_skip.csv"));
  const std::string id = p["id"];
  ASSERT_EQ(p["tree"]["root"]["children"][0]["kind"], "xor");
  wb->edit_tree(id, Json{{"op", "change_operator"}, {"node", Json::array({0})}, {"kind", "sequence"}});
  const Json after = wb->edit_tree(id, Json{{"op", "delete_child"}, {"node", Json::array({0})}, {"position", 1}});
  EXPECT_EQ(after["tree"]["root"]["children"][0]["name"], "A_Create Application");
  EXPECT_EQ(after["tree"]["root"]["children"].size(), 4u);
  bool skipped_warning = false;
  for (const auto& w : after["warnings"]) skipped_warning |= w.get<std::string>().find("skipped") != std::string::npos;
  EXPECT_TRUE(skipped_warning);
}

TEST_F(WorkbenchTest, EditErrorsMapToStatuses) {
  auto wb = open();
  const std::string id = wb->create_project(kSample)["id"];
  ErrorCode code{};
  EXPECT_EQ(status_of([&] { wb->edit_tree(id, Json{{"op", "delete_child"}, {"node", Json::array({7})}, {"position", 0}}); }, &code),
            404);
  EXPECT_EQ(code, ErrorCode::BadNodeId);
  EXPECT_EQ(status_of([&] {
              wb->edit_tree(id, Json{{"op", "replace_subtree"}, {"node", Json::array()}, {"subtree", "+(a)"}});
              wb->edit_tree(id, Json{{"op", "change_operator"}, {"node", Json::array()}, {"kind", "loop"}});
            }, &code),
            409);
  EXPECT_EQ(code, ErrorCode::InvariantViolation);
  EXPECT_EQ(status_of([&] { wb->edit_tree(id, Json{{"op", "explode"}, {"node", Json::array()}}); }), 422);
  EXPECT_EQ(status_of([&] { wb->edit_tree("nope", Json{{"op", "reset"}}); }), 404);
}

TEST_F(WorkbenchTest, ResetRestoresDiscoveredTree) {
  auto wb = open();
  const Json p = wb->create_project(kSample);
  const std::string id = p["id"];
  const Json edited =
      wb->edit_tree(id, Json{{"op", "change_operator"}, {"node", Json::array()}, {"kind", "xor"}});
  EXPECT_NE(edited["tree"], p["tree"]);
  EXPECT_EQ(wb->edit_tree(id, Json{{"op", "reset"}})["tree"], p["discovered_tree"]);
}

TEST_F(WorkbenchTest, UnobservedXorBranchIsUniformAndFlagged) {
  auto wb = open();
  const std::string id = wb->create_project(kSample)["id"];
  const Json j = wb->edit_tree(id, Json{{"op", "replace_subtree"}, {"node", Json::array({1})}, {"subtree", "X(b, d)"}});
  EXPECT_EQ(j["tree"]["root"]["children"][1]["weights"], Json::array({1.0, 0.0}));
  const Json k = wb->edit_tree(id, Json{{"op", "replace_subtree"}, {"node", Json::array({2})}, {"subtree", "X(e, f)"}});
  ASSERT_FALSE(k["warnings"].empty());
  EXPECT_NE(k["warnings"].dump().find("no source trace"), std::string::npos);
}

TEST_F(WorkbenchTest, XorWeightEditsAreKept) {
  auto wb = open();
  const std::string id = wb->create_project(data_file("loan_skip.csv"))["id"];
  const Json j = wb->edit_tree(id, Json{{"op", "set_xor_weights"}, {"node", Json::array({0})}, {"weights", {0.9, 0.1}}});
  EXPECT_EQ(j["tree"]["root"]["children"][0]["weights"], Json::array({0.9, 0.1}));
  ErrorCode code{};
  EXPECT_EQ(status_of([&] { wb->edit_tree(id, Json{{"op", "set_xor_weights"}, {"node", Json::array({0})}, {"weights", {0.9, 0.3}}}); },
                      &code),
            409);
  EXPECT_EQ(code, ErrorCode::InvariantViolation);
}

TEST_F(WorkbenchTest, ParamsMergeValidateAndReset) {
  auto wb = open();
  const Json p = wb->create_project(kSample);
  const std::string id = p["id"];
  const Json j = wb->update_params(id, Json{{"activities", {{"a", {{"capacity", 2}}}}}});
  EXPECT_EQ(j["params"]["activities"]["a"]["capacity"], 2);
  EXPECT_EQ(j["params"]["activities"]["b"], p["params"]["activities"]["b"]);
  EXPECT_EQ(j["mined_params"], p["mined_params"]);
  EXPECT_EQ(j["overrides"].size(), 1u);

  ErrorCode code{};
  EXPECT_EQ(status_of([&] { wb->update_params(id, Json{{"activities", {{"a", {{"capacity", -1}}}}}}); }, &code), 422);
  EXPECT_EQ(code, ErrorCode::InvalidArgument);
  EXPECT_EQ(wb->get_project(id)["params"]["activities"]["a"]["capacity"], 2);

  const Json r = wb->update_params(id, Json{{"reset", true}});
  EXPECT_EQ(r["params"], p["mined_params"]);
  EXPECT_TRUE(r["overrides"].empty());
}

TEST_F(WorkbenchTest, XorWeightsThroughParams) {
  auto wb = open();
  const std::string id = wb->create_project(data_file("loan_skip.csv"))["id"];
  ErrorCode code{};
  EXPECT_EQ(status_of([&] { wb->update_params(id, Json{{"xor_weights", Json::array({Json{{"node", Json::array({0})}, {"weights", {0.5, 0.6}}}})}}); },
                      &code),
            422);
  EXPECT_EQ(code, ErrorCode::InvariantViolation);
  const Json j = wb->update_params(id, Json{{"xor_weights", Json::array({Json{{"node", Json::array({0})}, {"weights", {0.25, 0.75}}}})}});
  EXPECT_EQ(j["tree"]["root"]["children"][0]["weights"], Json::array({0.25, 0.75}));
}

TEST_F(WorkbenchTest, CapacityOverrideReachesTheNextRun) {
  // Five cases arriving together on a single server: raising the capacity
  // must cut the waiting time.
  std::string csv = "case:concept:name,concept:name,start_timestamp,time:timestamp\n";
  for (int i = 0; i < 5; ++i) {
    csv += "c" + std::to_string(i) + ",a,2024-01-01T09:0" + std::to_string(i) + ":00Z,2024-01-01T09:0" +
           std::to_string(i) + ":00Z\n";
  }
  auto wb = open();
  const std::string id = wb->create_project(csv)["id"];
  wb->update_params(id, Json{{"activities", {{"a", {{"mean_duration", 600}, {"std_duration", 0}}}}},
                             {"arrival", {{"mean_interarrival", 1}, {"std_interarrival", 0}}},
                             {"calendar", nullptr},
                             {"process_capacity", nullptr}});
  const std::string r1 = wb->start_run(id, config(5))["id"];
  const double w1 = wait_done(*wb, r1)["kpis"]["activities"]["a"]["mean_waiting"];
  wb->update_params(id, Json{{"activities", {{"a", {{"capacity", 5}}}}}});
  const std::string r2 = wb->start_run(id, config(5))["id"];
  const double w2 = wait_done(*wb, r2)["kpis"]["activities"]["a"]["mean_waiting"];
  EXPECT_GT(w1, 0.0);
  EXPECT_LT(w2, w1);
}

TEST_F(WorkbenchTest, RunLifecycleLogAndCompare) {
  auto wb = open();
  const std::string source = data_file("order.csv");
  const std::string id = wb->create_project(source)["id"];
  const Json queued = wb->start_run(id, config(500, 3));
  EXPECT_EQ(queued["status"], "queued");
  EXPECT_FALSE(queued.contains("kpis"));
  const Json done = wait_done(*wb, queued["id"]);
  ASSERT_EQ(done["status"], "done") << done.dump();
  EXPECT_EQ(done["summary"]["cases"], 500);
  const std::string csv = wb->run_log_csv(queued["id"]);
  EXPECT_EQ(write_csv_string(parse_csv_string(csv)), csv);
  const Json emd = wb->compare(queued["id"]);
  EXPECT_LE(emd["distance"].get<double>(), 0.40);
  EXPECT_EQ(wb->compare(queued["id"]), emd);
  EXPECT_EQ(wb->get_run(queued["id"])["emd"], emd["distance"]);
  EXPECT_EQ(wb->get_project(id)["runs"][0]["status"], "done");
}

TEST_F(WorkbenchTest, RunErrors) {
  auto wb = open();
  const std::string id = wb->create_project(kSample)["id"];
  EXPECT_EQ(status_of([&] { wb->get_run("r0"); }), 404);
  EXPECT_EQ(status_of([&] { wb->compare("r0"); }), 404);
  EXPECT_EQ(status_of([&] { wb->start_run(id, config(0)); }), 422);
  EXPECT_EQ(status_of([&] { wb->start_run(id, Json{{"num_cases", 3}}); }), 422);
  EXPECT_EQ(status_of([&] { wb->start_run("missing", config(1)); }), 404);
}

TEST_F(WorkbenchTest, RunningAndQueuedRunsHaveNoResult) {
  auto wb = open(1);
  const std::string id = wb->create_project(data_file("order.csv"))["id"];
  const std::string slow = wb->start_run(id, config(20000))["id"];
  const std::string next = wb->start_run(id, config(10))["id"];
  ErrorCode code{};
  EXPECT_EQ(status_of([&] { wb->compare(next); }, &code), 409);
  EXPECT_EQ(code, ErrorCode::Conflict);
  EXPECT_EQ(status_of([&] { wb->run_log_csv(next); }), 409);
  Json r = wb->get_run(slow);
  while (r["status"] == "queued") {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    r = wb->get_run(slow);
  }
  if (r["status"] == "running") EXPECT_FALSE(r.contains("kpis"));
  wb->wait_idle();
  EXPECT_EQ(wb->get_run(slow)["status"], "done");
  EXPECT_EQ(wb->get_run(next)["status"], "done");
}

TEST_F(WorkbenchTest, ConcurrentRunsAreIsolated) {
  auto wb = open(3);
  const Json p = wb->create_project(data_file("claims.csv"));
  const std::string id = p["id"];
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) ids.push_back(wb->start_run(id, config(300, 11))["id"]);
  const std::string other = wb->start_run(id, config(300, 12))["id"];
  wb->wait_idle();

  SimConfig c = sim_config_from_json(config(300, 11));
  const auto direct = simulate(tree_from_json(p["tree"]), params_from_json(p["params"]), c);
  for (const auto& r : ids) EXPECT_EQ(wb->run_log_csv(r), write_csv_string(direct.log));
  EXPECT_NE(wb->run_log_csv(other), write_csv_string(direct.log));
}

TEST_F(WorkbenchTest, StateSurvivesRestart) {
  std::string project_id, run_id;
  Json project, run;
  std::string log;
  {
    auto wb = open();
    project_id = wb->create_project(data_file("helpdesk.csv"))["id"];
    wb->edit_tree(project_id, Json{{"op", "swap_children"}, {"node", Json::array()}, {"first", 0}, {"second", 1}});
    wb->update_params(project_id, Json{{"process_capacity", 3}});
    run_id = wb->start_run(project_id, config(50))["id"];
    wb->wait_idle();
    wb->compare(run_id);
    project = wb->get_project(project_id);
    run = wb->get_run(run_id);
    log = wb->run_log_csv(run_id);
  }
  EXPECT_FALSE(has_tmp_files(root));
  auto wb = open();
  EXPECT_EQ(wb->get_project(project_id), project);
  EXPECT_EQ(wb->get_run(run_id), run);
  EXPECT_EQ(wb->run_log_csv(run_id), log);
}

TEST_F(WorkbenchTest, UnfinishedRunsFailAfterRestart) {
  std::string queued;
  {
    auto wb = open(1);
    const std::string id = wb->create_project(data_file("order.csv"))["id"];
    wb->start_run(id, config(5000));
    queued = wb->start_run(id, config(10))["id"];
    wb->shutdown();
    EXPECT_EQ(wb->get_run(queued)["status"], "queued");
  }
  auto wb = open(1);
  const Json r = wb->get_run(queued);
  EXPECT_EQ(r["status"], "failed");
  EXPECT_EQ(r["error"], "interrupted by shutdown");
}

TEST(ServiceErrors, BodyShape) {
  const Json j = error_body(Error(ErrorCode::BadNodeId, "no such node", "[3]"));
  EXPECT_EQ(j, (Json{{"code", "BadNodeId"}, {"message", "no such node"}, {"detail", "[3]"}}));
}
