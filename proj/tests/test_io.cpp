#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "hypoflow/integrator.hpp"
#include "hypoflow/io.hpp"
#include "hypoflow/random_state.hpp"

namespace fs = std::filesystem;
using namespace hypoflow;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("hypoflow-test-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("snapshot round trip is exact") {
  TempDir tmp("snapshot");
  for (int dim : {1, 2}) {
    auto grid = build_grid<double>({dim, 8, 6, 1.0});
    std::mt19937_64 rng(dim);
    RandomStateOptions ro;
    ro.max_mode = 1;
    auto s = random_state(grid, rng, ro);
    s.time = 0.3;
    const fs::path file = tmp.path / ("s" + std::to_string(dim) + ".txt");
    write_snapshot(file, s);
    const auto back = read_snapshot(file);
    CHECK(back.grid->dim() == dim);
    CHECK(back.time == 0.3);
    CHECK((back.h - s.h).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("malformed snapshots are rejected") {
  TempDir tmp("bad-snapshot");
  const fs::path file = tmp.path / "bad.txt";
  std::ofstream(file) << "not a snapshot\n";
  CHECK_THROWS_AS(read_snapshot(file), ConfigError);
  CHECK_THROWS_AS(read_snapshot(tmp.path / "missing.txt"), ConfigError);
}

TEST_CASE("trajectory round trip keeps times, states and schedule") {
  TempDir tmp("trajectory");
  auto grid = build_grid<double>({1, 16, 8, 1.0});
  std::mt19937_64 rng(4);
  Schedule sc;
  sc.t_end = 0.1;
  sc.dt = 0.02;
  sc.snapshot_every = 2;
  const auto traj = simulate(random_state(grid, rng), sc);
  write_trajectory(tmp.path / "traj", traj);
  const auto back = read_trajectory(tmp.path / "traj");
  REQUIRE(back.snapshots.size() == traj.snapshots.size());
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    CHECK(back.snapshots[k].first == traj.snapshots[k].first);
    CHECK((back.snapshots[k].second.h - traj.snapshots[k].second.h).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(back.schedule.dt == sc.dt);
  CHECK(back.schedule.collision.lambda == sc.collision.lambda);
}

TEST_CASE("report CSV has one row per report and empty cells for absent values") {
  TempDir tmp("csv");
  auto grid = build_grid<double>({1, 16, 8, 1.0});
  std::mt19937_64 rng(8);
  std::vector<FunctionalReport> reports;
  for (int k = 0; k < 3; ++k) {
    auto r = functional_report(random_state(grid, rng), PIndex::log_entropy());
    r.time = 0.5 * k;
    reports.push_back(r);
  }
  write_reports_csv(tmp.path / "f.csv", reports);
  const auto lines = lines_of(tmp.path / "f.csv");
  REQUIRE(lines.size() == 4);
  const auto header = split(lines[0]);
  CHECK(header == report_columns());
  CHECK(header.front() == "time");

  const auto row = split(lines[2]);
  REQUIRE(row.size() == header.size());
  CHECK(std::stod(row[0]) == 0.5);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "D") CHECK(row[c].empty());  // p-entropies only
    if (header[c] == "H") CHECK(std::stod(row[c]) == reports[1].at(FunctionalName::H));
  }

  const auto j = reports_json(reports);
  CHECK(j.size() == 3);
  write_json(tmp.path / "f.json", j);
  CHECK(read_json(tmp.path / "f.json") == j);
}
