// Trace, portrait and report serialization.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pbtrack/errors.hpp"
#include "pbtrack/sim.hpp"

namespace pbtrack {

namespace detail {

inline std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that reads back to the same double; for console output.
inline std::string shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

}  // namespace detail

/// Column names of a trace for an n-dimensional system.
inline std::vector<std::string> trace_columns(Eigen::Index n) {
  std::vector<std::string> cols{"t"};
  for (Eigen::Index i = 1; i <= n; ++i) cols.push_back("q_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= n; ++i) cols.push_back("qd_" + std::to_string(i));
  for (const char* c : {"s", "sdot", "sigma", "sigmadot", "stilde", "stildedot", "phi", "psi", "H", "H_r", "W_sigma",
                        "E", "dEdt_num", "neg_R_std2"})
    cols.emplace_back(c);
  for (Eigen::Index i = 1; i <= n; ++i) cols.push_back("tau_" + std::to_string(i));
  for (const char* c : {"e_c", "f_pow", "fr_pow"}) cols.emplace_back(c);
  return cols;
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  if (trace.samples.empty()) {
    throw Error(ErrorKind::io, "cannot write an empty trace");
  }
  const auto n = trace.samples.front().state.dim();
  const auto cols = trace_columns(n);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& smp : trace.samples) {
    std::vector<double> row{smp.t};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(smp.state.q(i));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(smp.state.qdot(i));
    const auto& e = smp.energy;
    const auto& y = smp.sync;
    row.insert(row.end(), {smp.state.s, smp.state.sdot, smp.state.sigma, y.sigma_dot, y.s_tilde, y.s_tilde_dot, e.phi,
                           e.psi, e.H_true, e.H_ref, e.W_sigma, e.E_total, e.dE_dt_numeric, e.neg_R_stilde_dot_sq});
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(smp.tau_total(i));
    row.insert(row.end(), {smp.e_total, smp.f_pow, smp.fr_pow});
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::num17(row[i]);
    out << '\n';
  }
}

/// Trace as read back from CSV: named columns over a numeric table.
struct TraceTable {
  Eigen::Index dim = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error(ErrorKind::misuse, "no column '" + name + "'");
  }

  std::vector<double> column(const std::string& name) const {
    const auto i = index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }
};

/// Reads a trace CSV and checks its header against the trace schema.
inline TraceTable read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::io, "empty trace file");
  TraceTable table;
  table.columns = detail::split_csv(line);
  Eigen::Index n = 0;
  while (std::find(table.columns.begin(), table.columns.end(), "q_" + std::to_string(n + 1)) != table.columns.end()) ++n;
  if (n == 0 || table.columns != trace_columns(n)) throw Error(ErrorKind::io, "line 1: header is not a trace header");
  table.dim = n;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != table.columns.size()) {
      throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(table.columns.size()) + " fields, got " +
                                     std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(detail::parse_cell(c, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void write_portrait_csv(std::ostream& out, const std::vector<PortraitRun>& runs) {
  out << "seed_id,t,s,sdot\n";
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < run.t.size(); ++k) {
      out << run.seed_id << ',' << detail::num17(run.t[k]) << ',' << detail::num17(run.s[k]) << ','
          << detail::num17(run.sdot[k]) << '\n';
    }
  }
}

/// Groups portrait rows back into runs by seed id. Seeds and faults are not
/// part of the file; the seed is recovered from each run's first row.
inline std::vector<PortraitRun> read_portrait_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::split_csv(line) != std::vector<std::string>{"seed_id", "t", "s", "sdot"}) {
    throw Error(ErrorKind::io, "line 1: header must be seed_id,t,s,sdot");
  }
  std::map<std::size_t, PortraitRun> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 4) throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": expected 4 fields");
    const double id = detail::parse_cell(cells[0], line_no);
    if (id < 0 || id != std::floor(id)) throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": bad seed_id");
    auto& run = by_id[static_cast<std::size_t>(id)];
    run.seed_id = static_cast<std::size_t>(id);
    run.t.push_back(detail::parse_cell(cells[1], line_no));
    run.s.push_back(detail::parse_cell(cells[2], line_no));
    run.sdot.push_back(detail::parse_cell(cells[3], line_no));
    if (run.t.size() == 1) run.seed = {run.s.front(), run.sdot.front()};
  }
  std::vector<PortraitRun> out;
  for (auto& [id, run] : by_id) out.push_back(std::move(run));
  return out;
}

/// Seed grid file: header `s0,sdot0`, one seed per row.
inline std::vector<PortraitSeed> read_seed_grid(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::split_csv(line) != std::vector<std::string>{"s0", "sdot0"}) {
    throw Error(ErrorKind::config, "seed grid: line 1: header must be s0,sdot0");
  }
  std::vector<PortraitSeed> seeds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 2) throw Error(ErrorKind::config, "seed grid: line " + std::to_string(line_no) + ": expected 2 fields");
    try {
      seeds.push_back({detail::parse_cell(cells[0], line_no), detail::parse_cell(cells[1], line_no)});
    } catch (const Error& e) {
      throw Error(ErrorKind::config, std::string("seed grid: ") + e.what());
    }
  }
  if (seeds.empty()) throw Error(ErrorKind::config, "seed grid has no seeds");
  return seeds;
}

/// Flat `key = value` report, one entry per line, in insertion order.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, detail::num17(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    throw Error(ErrorKind::misuse, "report has no key '" + key + "'");
  }

  void write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline void add_convergence(Report& r, const ConvergenceReport& c, const std::string& prefix = "") {
  r.add(prefix + "tail_start", c.tail_start);
  r.add(prefix + "tail_samples", c.tail_samples);
  r.add(prefix + "stilde_mean", c.stilde_mean);
  r.add(prefix + "stilde_slope", c.stilde_slope);
  r.add(prefix + "stilde_dot_mean_abs", c.stilde_dot_mean_abs);
  r.add(prefix + "stilde_dot_max_abs", c.stilde_dot_max_abs);
  r.add(prefix + "phi_mean", c.phi_mean);
  r.add(prefix + "phi_max", c.phi_max);
  r.add(prefix + "phi_final", c.phi_final);
  r.add(prefix + "sdot_error_max", c.sdot_error_max);
  r.add(prefix + "sdot_error_final", c.sdot_error_final);
  r.add(prefix + "E_max_abs", c.E_max_abs);
  r.add(prefix + "E_final", c.E_final);
  r.add(prefix + "tracking_error_max", c.tracking_error_max);
  r.add(prefix + "t0_estimate", c.t0_estimate);
  r.add(prefix + "t0_slope", c.t0_slope);
}

}  // namespace pbtrack
