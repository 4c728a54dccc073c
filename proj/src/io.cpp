#include "hypoflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hypoflow {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06zu.txt", i);
  return buf;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(const fs::path& path, const State<double>& s) {
  const Grid<double>& g = *s.grid;
  std::ofstream out = open_out(path);
  out << kSnapshotMagic << '\n'
      << g.dim() << ' ' << g.spec().nx << ' ' << g.spec().nv << ' ' << format_number(s.time) << '\n';
  for (Eigen::Index ix = 0; ix < s.h.rows(); ++ix) {
    for (Eigen::Index iv = 0; iv < s.h.cols(); ++iv) out << (iv ? " " : "") << format_number(s.h(ix, iv));
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

State<double> read_snapshot(const fs::path& path, const GridPtr<double>& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot '" + path.string() + "'");
  std::string magic;
  std::getline(in, magic);
  if (magic != kSnapshotMagic) throw ConfigError("'" + path.string() + "' is not a hypoflow snapshot");
  GridSpec spec{1, 0, 0, 1.0};
  double time = 0.0;
  if (!(in >> spec.dim >> spec.nx >> spec.nv >> time)) throw ConfigError("bad snapshot header in '" + path.string() + "'");
  spec.validate();
  GridPtr<double> g = grid;
  if (!g || g->spec().dim != spec.dim || g->spec().nx != spec.nx || g->spec().nv != spec.nv) g = build_grid<double>(spec);
  Field<double> h(g->num_x(), g->num_v());
  for (Eigen::Index ix = 0; ix < h.rows(); ++ix) {
    for (Eigen::Index iv = 0; iv < h.cols(); ++iv) {
      if (!(in >> h(ix, iv))) throw ConfigError("truncated snapshot '" + path.string() + "'");
    }
  }
  return make_state<double>(std::move(g), std::move(h), time);
}

State<double> read_snapshot(const fs::path& path) { return read_snapshot(path, nullptr); }

void write_trajectory(const fs::path& dir, const Trajectory<double>& traj) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = kTrajectoryFormatVersion;
  if (!traj.snapshots.empty()) {
    const GridSpec& spec = traj.snapshots.front().second.grid->spec();
    manifest["grid"] = {{"dim", spec.dim}, {"nx", spec.nx}, {"nv", spec.nv}, {"period", spec.period}};
  }
  const Schedule& s = traj.schedule;
  manifest["schedule"] = {{"dt", s.dt}, {"t_end", s.t_end}, {"snapshot_every", s.snapshot_every}};
  manifest["collision"] = {{"kind", s.collision.name()}, {"lambda", s.collision.lambda}};
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const std::string name = snapshot_name(i);
    write_snapshot(dir / name, traj.snapshots[i].second);
    files.push_back({{"time", traj.snapshots[i].first}, {"file", name}});
  }
  manifest["snapshots"] = files;
  write_json(dir / "manifest.json", manifest);
}

Trajectory<double> read_trajectory(const fs::path& dir) {
  const nlohmann::json m = read_json(dir / "manifest.json");
  try {
    if (m.at("format_version").get<int>() != kTrajectoryFormatVersion) {
      throw ConfigError("unsupported trajectory format in '" + dir.string() + "'");
    }
    Trajectory<double> traj;
    const auto& c = m.at("collision");
    traj.schedule.collision = c.at("kind").get<std::string>() == "bgk" ? CollisionKind::bgk(c.at("lambda").get<double>())
                                                                      : CollisionKind::fokker_planck();
    traj.schedule.dt = m.at("schedule").at("dt").get<double>();
    traj.schedule.t_end = m.at("schedule").at("t_end").get<double>();
    traj.schedule.snapshot_every = m.at("schedule").at("snapshot_every").get<int>();
    GridPtr<double> grid;
    for (const auto& entry : m.at("snapshots")) {
      State<double> s = read_snapshot(dir / entry.at("file").get<std::string>(), grid);
      grid = s.grid;
      traj.snapshots.emplace_back(s.time, std::move(s));
    }
    return traj;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed trajectory manifest in '" + dir.string() + "': " + e.what());
  }
}

std::vector<std::string> report_columns(const std::vector<std::string>& extra) {
  std::vector<std::string> cols{"time", "p", "tail_fraction", "under_resolved"};
  for (FunctionalName n : kAllFunctionals) cols.emplace_back(to_string(n));
  cols.insert(cols.end(), extra.begin(), extra.end());
  return cols;
}

void write_reports_csv(const fs::path& path, const std::vector<FunctionalReport>& reports,
                       const std::vector<std::string>& extra_names, const std::vector<std::vector<double>>& extra_values) {
  if (!extra_values.empty() && extra_values.size() != reports.size()) throw Error("write_reports_csv: extra rows mismatch");
  std::ofstream out = open_out(path);
  const auto cols = report_columns(extra_names);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (std::size_t row = 0; row < reports.size(); ++row) {
    const FunctionalReport& r = reports[row];
    out << format_number(r.time) << ',' << r.p.label() << ',' << format_number(r.tail_fraction) << ','
        << (r.under_resolved ? 1 : 0);
    for (const auto& v : r.values) {
      out << ',';
      if (v) out << format_number(*v);
    }
    if (!extra_values.empty()) {
      for (double v : extra_values[row]) out << ',' << format_number(v);
    }
    out << '\n';
  }
}

nlohmann::json reports_json(const std::vector<FunctionalReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json values = nlohmann::json::object();
    for (FunctionalName n : kAllFunctionals) {
      if (const auto v = r.get(n)) values[std::string(to_string(n))] = *v;
    }
    arr.push_back({{"time", r.time},
                   {"p", r.p.label()},
                   {"tail_fraction", r.tail_fraction},
                   {"under_resolved", r.under_resolved},
                   {"values", values}});
  }
  return arr;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace hypoflow
