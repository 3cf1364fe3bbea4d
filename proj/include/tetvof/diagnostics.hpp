/******************************************************************************
 *
 * tetvof - volume conserving liquid simulation on deforming tetrahedral meshes
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 ******************************************************************************/

#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tetvof/core.hpp"

namespace tetvof {

// One row per simulation step. `cons_err_rel` reconciles the VOF+particle
// subsystem against the ledger flows; the grid is deliberately outside the
// exact accounting.
struct DiagnosticsRow {
  int frame = 0;
  double vof_vol = 0;
  double particle_vol = 0;
  double grid_vol = 0;
  double ledger_in = 0;   // from_grid + submerged overwrites + sources
  double ledger_out = 0;  // particle volume reincorporated into the grid
  double cons_err_rel = 0;
  Vec3 momentum{};
  double ms_advect = 0, ms_conserve = 0, ms_project = 0;
};

inline const char* kDiagnosticsHeader =
    "frame,vof_vol,particle_vol,grid_vol,ledger_in,ledger_out,cons_err_rel,"
    "mom_x,mom_y,mom_z,ms_advect,ms_conserve,ms_project";

inline std::string format_row(const DiagnosticsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f,%.3f,%.3f",
                r.frame, r.vof_vol, r.particle_vol, r.grid_vol, r.ledger_in, r.ledger_out,
                r.cons_err_rel, r.momentum.x, r.momentum.y, r.momentum.z, r.ms_advect,
                r.ms_conserve, r.ms_project);
  return buf;
}

inline void write_diagnostics(const std::string& path, const std::vector<DiagnosticsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("write_diagnostics: cannot open " + path);
  out << kDiagnosticsHeader << "\n";
  for (const DiagnosticsRow& r : rows) out << format_row(r) << "\n";
}

inline std::vector<DiagnosticsRow> read_diagnostics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_diagnostics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("read_diagnostics: empty file " + path);
  if (line != kDiagnosticsHeader)
    throw Error("read_diagnostics: unexpected header in " + path);
  std::vector<DiagnosticsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    DiagnosticsRow r;
    double frame;
    int got = std::sscanf(line.c_str(),
                          "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &frame,
                          &r.vof_vol, &r.particle_vol, &r.grid_vol, &r.ledger_in, &r.ledger_out,
                          &r.cons_err_rel, &r.momentum.x, &r.momentum.y, &r.momentum.z,
                          &r.ms_advect, &r.ms_conserve, &r.ms_project);
    if (got != 13)
      throw Error("read_diagnostics: malformed row at " + path + ":" + std::to_string(lineno));
    r.frame = static_cast<int>(frame);
    rows.push_back(r);
  }
  return rows;
}

struct ReportSummary {
  size_t rows = 0;
  double mean_err = 0;
  double max_err = 0;
  double mean_ms_advect = 0, mean_ms_conserve = 0, mean_ms_project = 0;
  double final_vof_vol = 0, final_particle_vol = 0, final_grid_vol = 0;
};

inline ReportSummary summarize(const std::vector<DiagnosticsRow>& rows) {
  ReportSummary s;
  s.rows = rows.size();
  if (rows.empty()) return s;
  for (const DiagnosticsRow& r : rows) {
    s.mean_err += r.cons_err_rel;
    s.max_err = std::max(s.max_err, r.cons_err_rel);
    s.mean_ms_advect += r.ms_advect;
    s.mean_ms_conserve += r.ms_conserve;
    s.mean_ms_project += r.ms_project;
  }
  s.mean_err /= rows.size();
  s.mean_ms_advect /= rows.size();
  s.mean_ms_conserve /= rows.size();
  s.mean_ms_project /= rows.size();
  s.final_vof_vol = rows.back().vof_vol;
  s.final_particle_vol = rows.back().particle_vol;
  s.final_grid_vol = rows.back().grid_vol;
  return s;
}

}  // namespace tetvof
