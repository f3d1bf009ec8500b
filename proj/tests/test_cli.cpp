#include <doctest.h>

#include "gnncf/io.hpp"
#include "gnncf/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* path = std::getenv("GNNCF_CLI");
  REQUIRE_MESSAGE(path != nullptr, "GNNCF_CLI must point at the built binary");
  return path;
}

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run(const std::string& args) {
  std::string cmd = cli() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  INFO("file: ", p.string());
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Scratch directory removed at scope exit; unique per test case.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("gnncf-cli-" + tag + "-" +
                                          std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

/// Shared fixture: one small dataset and trained model reused across checks
/// to keep the suite fast.
struct Workspace {
  TempDir dir{"ws"};
  std::string data, model;
  Workspace() {
    data = dir / "data";
    model = dir / "model.txt";
    CmdResult d = run("dataset --generator ba-shapes --base-nodes 60 --attach 4 --motifs 12 "
                      "--seed 102 --out " + data);
    REQUIRE(d.exit_code == 0);
    CmdResult t = run("train --data " + data + " --train-lr 5.0 --train-epochs 200 --out " +
                      model);
    REQUIRE(t.exit_code == 0);
    REQUIRE(t.output.find("train accuracy:") != std::string::npos);
    REQUIRE(t.output.find("test accuracy:") != std::string::npos);
  }
  std::string explain_args(const std::string& out) const {
    return "explain --data " + data + " --model " + model +
           " --eta 0.1 --sample 10 --seeds 102 --out " + out;
  }
};

std::map<std::string, std::string> record_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename().string().rfind("target_", 0) == 0)
      out[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return out;
}

}  // namespace

TEST_CASE("cli: help text and usage errors") {
  CmdResult help = run("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("Subcommands:") != std::string::npos);
  CHECK(help.output.find("explain") != std::string::npos);

  CHECK(run("no-such-command").exit_code == 2);
  CHECK(run("explain --method bogus --out /tmp/x").exit_code == 2);
  CHECK(run("").exit_code == 2);  // a subcommand is required
}

TEST_CASE("cli: dataset generation is byte-deterministic per seed") {
  TempDir dir("dataset");
  std::string base = "dataset --generator ba-shapes --base-nodes 40 --attach 3 --motifs 8 ";
  REQUIRE(run(base + "--seed 5 --out " + (dir / "a")).exit_code == 0);
  REQUIRE(run(base + "--seed 5 --out " + (dir / "b")).exit_code == 0);
  REQUIRE(run(base + "--seed 6 --out " + (dir / "c")).exit_code == 0);
  for (const char* f : {"edges.txt", "labels.txt", "manifest.txt"})
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  CHECK(slurp(dir.path / "a" / "edges.txt") != slurp(dir.path / "c" / "edges.txt"));
}

TEST_CASE("cli: explain runs, round trip, and determinism") {
  Workspace ws;

  CmdResult r1 = run(ws.explain_args(ws.dir / "run1"));
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.output.find("method,misclass,fidelity,de_total,de_add,de_del,plausibility,time_sec") !=
        std::string::npos);

  SUBCASE("two identical runs produce byte-identical per-target records") {
    CmdResult r2 = run(ws.explain_args(ws.dir / "run2"));
    REQUIRE(r2.exit_code == 0);
    auto a = record_files(ws.dir.path / "run1");
    auto b = record_files(ws.dir.path / "run2");
    REQUIRE(a.size() == 10);
    CHECK(a == b);
  }

  SUBCASE("parallel execution does not change the output") {
    CmdResult rj = run(ws.explain_args(ws.dir / "runj") + " --jobs 4");
    REQUIRE(rj.exit_code == 0);
    CHECK(record_files(ws.dir.path / "run1") == record_files(ws.dir.path / "runj"));
  }

  SUBCASE("summary equals recomputation from the shipped records") {
    std::vector<gnncf::TargetRecord> records;
    for (const auto& [name, text] : record_files(ws.dir.path / "run1"))
      records.push_back(gnncf::parse_record(text));
    gnncf::EvaluationReport rep = gnncf::aggregate(records);

    std::string summary = slurp(ws.dir.path / "run1" / "summary.csv");
    std::istringstream lines(summary);
    std::string header, row;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row));
    std::vector<std::string> cells;
    std::istringstream cs(row);
    for (std::string c; std::getline(cs, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 8);
    CHECK(cells[0] == "optimizer-s102");
    CHECK(cells[1] == gnncf::format_real(rep.misclassification_rate));
    CHECK(cells[2] == gnncf::format_real(rep.fidelity));
    REQUIRE(rep.mean_size.has_value());
    CHECK(cells[3] == gnncf::format_real(*rep.mean_size));

    // The evaluate command reproduces the same numbers from disk.
    CmdResult ev = run("evaluate --records " + (ws.dir / "run1"));
    REQUIRE(ev.exit_code == 0);
    CHECK(ev.output.find("optimizer," + cells[1] + "," + cells[2] + "," + cells[3]) !=
          std::string::npos);
  }

  SUBCASE("run manifest records the effective configuration") {
    std::string manifest = slurp(ws.dir.path / "run1" / "manifest.txt");
    CHECK(manifest.rfind("gnncf-run v1\n", 0) == 0);
    CHECK(manifest.find("method = optimizer") != std::string::npos);
    CHECK(manifest.find("kappa = 5") != std::string::npos);
    CHECK(manifest.find("eta = 0.1") != std::string::npos);
    CHECK(manifest.find("seeds = 102") != std::string::npos);
  }
}

TEST_CASE("cli: config file values apply with flag precedence") {
  Workspace ws;
  std::string cfg = ws.dir / "cfg.ini";
  {
    std::ofstream out(cfg);
    out << "[explain]\n"
        << "data=" << ws.data << "\n"
        << "model=" << ws.model << "\n"
        << "eta=0.1\n"
        << "sample=7\n"
        << "seeds=102\n";
  }
  CmdResult r = run("--config " + cfg + " explain --sample 4 --out " + (ws.dir / "cfgrun"));
  REQUIRE(r.exit_code == 0);
  std::string manifest = slurp(ws.dir.path / "cfgrun" / "manifest.txt");
  CHECK(manifest.find("sample_n = 4") != std::string::npos);  // flag wins
  CHECK(manifest.find("eta = 0.1") != std::string::npos);     // file value applies
  CHECK(record_files(ws.dir.path / "cfgrun").size() == 4);
}

TEST_CASE("cli: baseline methods and --no-prune run through the same harness") {
  Workspace ws;
  for (const std::string m : {"random-deletion", "greedy-deletion", "attack-addition"}) {
    CmdResult r = run("explain --data " + ws.data + " --model " + ws.model + " --method " + m +
                      " --sample 5 --seeds 102 --out " + (ws.dir / ("run_" + m)));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find(m + "-s102,") != std::string::npos);
  }
  CmdResult np = run(ws.explain_args(ws.dir / "run_np") + " --no-prune");
  REQUIRE(np.exit_code == 0);
  std::string manifest = slurp(ws.dir.path / "run_np" / "manifest.txt");
  CHECK(manifest.find("prune = 0") != std::string::npos);
}

TEST_CASE("cli: theory ledger passes and exit codes follow the error taxonomy") {
  CmdResult th = run("theory --models 2000");
  CHECK(th.exit_code == 0);
  CHECK(th.output.find("deletion-infeasibility: PASS") != std::string::npos);
  CHECK(th.output.find("addition-sufficiency: PASS") != std::string::npos);
  CHECK(th.output.find("budgeted-reachability-dominance: PASS") != std::string::npos);
  CHECK(th.output.find("latent-stability: PASS") != std::string::npos);
  CHECK(th.output.find("FAIL") == std::string::npos);

  CHECK(run("explain --data /definitely/not/here --out /tmp/x").exit_code == 3);
  CHECK(run("evaluate --records /definitely/not/here").exit_code == 3);
  CHECK(run("dataset --generator ba-shapes --train-fraction 2.0 --out /tmp/x").exit_code == 2);
}
