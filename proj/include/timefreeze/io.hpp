#pragma once

#include <string>
#include <utility>
#include <vector>

#include "timefreeze/ocp.hpp"
#include "timefreeze/simulate.hpp"

namespace timefreeze {

// CSV and JSON emitters. Numbers are written with 17 significant digits so
// files round-trip to the exact doubles.

/// Columns: tau, t (clock), x components, frozen flag.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const PhysicalTrajectory& recovered);

/// Columns: t, x components.
void write_physical_csv(const std::string& path, const PhysicalTrajectory& traj);

/// Columns: scheme, M, h, E, fitted_order.
void write_convergence_csv(const std::string& path, const ConvergenceStudy& study);

/// Per-node decision variables of a solved transcription; control columns
/// hold the value of the interval starting at the node (held on the last row).
void write_ocp_solution_csv(const std::string& path, const TranscribedNlp& nlp, std::span<const double> x);

std::string trajectory_json(const Trajectory& traj, const PhysicalTrajectory& recovered);
std::string physical_json(const PhysicalTrajectory& traj);

struct ParsedTrajectoryCsv {
  Trajectory trajectory;
  std::vector<std::uint8_t> frozen_mask;
};

/// Inverse of write_trajectory_csv (controls are not stored in the CSV).
ParsedTrajectoryCsv read_trajectory_csv(const std::string& path);

/// Inverse of write_physical_csv (mask and jump bookkeeping not stored).
PhysicalTrajectory read_physical_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace timefreeze
