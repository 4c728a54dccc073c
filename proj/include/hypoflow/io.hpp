#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hypoflow/functionals.hpp"
#include "hypoflow/integrator.hpp"

namespace hypoflow {

inline constexpr const char* kSnapshotMagic = "hypoflow-snapshot 1";
inline constexpr int kTrajectoryFormatVersion = 1;

/// Text snapshot:
///   hypoflow-snapshot 1
///   <dim> <nx> <nv> <time>
///   one line per spatial node, nv^dim values each (%.17g)
void write_snapshot(const std::filesystem::path& path, const State<double>& s);
State<double> read_snapshot(const std::filesystem::path& path);
/// Reuses `grid` when its spec matches the file header.
State<double> read_snapshot(const std::filesystem::path& path, const GridPtr<double>& grid);

/// Directory with manifest.json and snapshot_NNNNNN.txt files.
void write_trajectory(const std::filesystem::path& dir, const Trajectory<double>& traj);
Trajectory<double> read_trajectory(const std::filesystem::path& dir);

/// Stable column order: time, p, tail_fraction, under_resolved, then every
/// functional in declaration order, then the extra columns. Absent values are
/// empty cells.
std::vector<std::string> report_columns(const std::vector<std::string>& extra = {});
void write_reports_csv(const std::filesystem::path& path, const std::vector<FunctionalReport>& reports,
                       const std::vector<std::string>& extra_names = {},
                       const std::vector<std::vector<double>>& extra_values = {});
nlohmann::json reports_json(const std::vector<FunctionalReport>& reports);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace hypoflow
