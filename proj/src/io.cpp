#include "timefreeze/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace timefreeze {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const PhysicalTrajectory& recovered) {
  auto out = open_out(path);
  const int nx = traj.n_y() - 1;
  out << "tau,t";
  for (int i = 0; i < nx; ++i) out << ",x" << i;
  out << ",frozen\n";
  for (int r = 0; r < traj.n_samples(); ++r) {
    out << num(traj.tau_grid[r]) << ',' << num(traj.clock(r));
    for (int i = 0; i < nx; ++i) out << ',' << num(traj.states(r, i));
    out << ',' << int(recovered.frozen_mask[r]) << '\n';
  }
}

void write_physical_csv(const std::string& path, const PhysicalTrajectory& traj) {
  auto out = open_out(path);
  out << "t";
  for (int i = 0; i < traj.states.cols(); ++i) out << ",x" << i;
  out << '\n';
  for (size_t r = 0; r < traj.t_grid.size(); ++r) {
    out << num(traj.t_grid[r]);
    for (int i = 0; i < traj.states.cols(); ++i) out << ',' << num(traj.states(static_cast<int>(r), i));
    out << '\n';
  }
}

void write_convergence_csv(const std::string& path, const ConvergenceStudy& study) {
  auto out = open_out(path);
  out << "scheme,M,h,E,fitted_order\n";
  for (const auto& cell : study.cells)
    out << scheme_name(cell.scheme) << ',' << cell.m_evals << ',' << num(cell.h) << ',' << num(cell.error) << ','
        << num(study.order_of(cell.scheme)) << '\n';
}

void write_ocp_solution_csv(const std::string& path, const TranscribedNlp& nlp, std::span<const double> x) {
  auto out = open_out(path);
  const NlpLayout& L = nlp.layout;
  out << "node,s,tau";
  for (int i = 0; i < L.n_y - 1; ++i) out << ",x" << i;
  out << ",clock";
  for (int c = 0; c < L.n_c; ++c) out << ",alpha" << c << ",lambda0_" << c << ",lambda1_" << c;
  for (int j = 0; j < L.n_u; ++j) out << ",u" << j;
  out << ",w\n";
  const double w = x[L.w_index()];
  for (int n = 0; n < L.n_nodes; ++n) {
    const double s = n * nlp.h;
    out << n << ',' << num(s) << ',' << num(s * w);
    for (int i = 0; i < L.n_y; ++i) out << ',' << num(x[L.y_start(n) + i]);
    for (int c = 0; c < L.n_c; ++c)
      out << ',' << num(x[L.alpha_index(n, c)]) << ',' << num(x[L.lambda0_index(n, c)]) << ','
          << num(x[L.lambda1_index(n, c)]);
    const int interval = n < L.n_nodes - 1 ? L.interval_of_step(n) : L.interval_of_step(L.n_nodes - 2);
    for (int j = 0; j < L.n_u; ++j) out << ',' << num(x[L.u_start(interval) + j]);
    out << ',' << num(w) << '\n';
  }
}

std::string trajectory_json(const Trajectory& traj, const PhysicalTrajectory& recovered) {
  std::ostringstream out;
  const int nx = traj.n_y() - 1;
  out << "{\"scheme\":\"" << scheme_name(traj.scheme) << "\",\"h\":" << num(traj.h) << ",\"samples\":[";
  for (int r = 0; r < traj.n_samples(); ++r) {
    if (r) out << ',';
    out << "{\"tau\":" << num(traj.tau_grid[r]) << ",\"t\":" << num(traj.clock(r)) << ",\"x\":[";
    for (int i = 0; i < nx; ++i) {
      if (i) out << ',';
      out << num(traj.states(r, i));
    }
    out << "],\"frozen\":" << int(recovered.frozen_mask[r]) << '}';
  }
  out << "]}";
  return out.str();
}

std::string physical_json(const PhysicalTrajectory& traj) {
  std::ostringstream out;
  out << "{\"n_jumps\":" << traj.n_jumps << ",\"jump_times\":[";
  for (size_t i = 0; i < traj.jump_times.size(); ++i) {
    if (i) out << ',';
    out << num(traj.jump_times[i]);
  }
  out << "],\"samples\":[";
  for (size_t r = 0; r < traj.t_grid.size(); ++r) {
    if (r) out << ',';
    out << "{\"t\":" << num(traj.t_grid[r]) << ",\"x\":[";
    for (int i = 0; i < traj.states.cols(); ++i) {
      if (i) out << ',';
      out << num(traj.states(static_cast<int>(r), i));
    }
    out << "]}";
  }
  out << "]}";
  return out.str();
}

ParsedTrajectoryCsv read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory csv: " + path);
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "tau" || header[1] != "t" || header.back() != "frozen")
    throw std::runtime_error("unexpected trajectory csv header in " + path);
  const int nx = static_cast<int>(header.size()) - 3;

  std::vector<Vec> rows;
  std::vector<std::uint8_t> mask;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::runtime_error("ragged trajectory csv row in " + path);
    Vec row;
    for (size_t i = 0; i + 1 < cells.size(); ++i) row.push_back(std::stod(cells[i]));
    mask.push_back(static_cast<std::uint8_t>(std::stoi(cells.back())));
    rows.push_back(std::move(row));
  }

  ParsedTrajectoryCsv out;
  out.frozen_mask = std::move(mask);
  out.trajectory.tau_grid.resize(rows.size());
  out.trajectory.states = Mat(static_cast<int>(rows.size()), nx + 1);
  for (size_t r = 0; r < rows.size(); ++r) {
    out.trajectory.tau_grid[r] = rows[r][0];
    for (int i = 0; i < nx; ++i) out.trajectory.states(static_cast<int>(r), i) = rows[r][2 + i];
    out.trajectory.states(static_cast<int>(r), nx) = rows[r][1];  // clock last
  }
  if (rows.size() >= 2) out.trajectory.h = out.trajectory.tau_grid[1] - out.trajectory.tau_grid[0];
  return out;
}

PhysicalTrajectory read_physical_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty physical csv: " + path);
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "t") throw std::runtime_error("unexpected physical csv header in " + path);
  const int nx = static_cast<int>(header.size()) - 1;

  std::vector<Vec> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::runtime_error("ragged physical csv row in " + path);
    Vec row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    rows.push_back(std::move(row));
  }
  PhysicalTrajectory out;
  out.t_grid.resize(rows.size());
  out.states = Mat(static_cast<int>(rows.size()), nx);
  for (size_t r = 0; r < rows.size(); ++r) {
    out.t_grid[r] = rows[r][0];
    for (int i = 0; i < nx; ++i) out.states(static_cast<int>(r), i) = rows[r][1 + i];
  }
  out.frozen_mask.assign(rows.size(), 0);
  return out;
}

}  // namespace timefreeze
