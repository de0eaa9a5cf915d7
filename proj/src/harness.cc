// Copyright 2026 The Cotune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cotune/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "cotune/error.h"
#include "cotune/format.h"
#include "cotune/synthesis.h"

namespace cotune {

namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Keeps free text inside one CSV cell.
std::string Sanitize(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return out;
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

double Quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string ParamsDump(const TuningReport& report) {
  std::ostringstream out;
  out << "# iter beta... | theta...\n";
  for (const auto& rec : report.iterations) {
    out << rec.iteration;
    for (double b : rec.beta) out << ' ' << FormatDouble(b);
    out << " |";
    for (double t : rec.theta) out << ' ' << FormatDouble(t);
    out << '\n';
  }
  return out.str();
}

std::vector<ResultRow> RowsOf(const ExperimentConfig& config,
                              const CellResult& cell) {
  std::vector<ResultRow> rows;
  const std::string strategy(StrategyName(cell.strategy));
  const double wall = config.run.record_wall_time ? cell.wall_ms : 0.0;
  if (!cell.report) {
    rows.push_back({config.experiment, strategy, cell.seed, 0, kNan, kNan,
                    "error: " + Sanitize(cell.error), wall});
    return rows;
  }
  for (const auto& rec : cell.report->iterations) {
    rows.push_back({config.experiment, strategy, cell.seed, rec.iteration,
                    rec.j_task_sys, rec.j_sysid, Sanitize(rec.term_reason),
                    wall});
  }
  return rows;
}

}  // namespace

std::string FormatRow(const ResultRow& r) {
  std::string s = r.experiment;
  s += ',';
  s += r.strategy;
  s += ',';
  s += std::to_string(r.seed);
  s += ',';
  s += std::to_string(r.iter);
  s += ',';
  s += FormatDouble(r.j_task_sys);
  s += ',';
  s += FormatDouble(r.j_sysid);
  s += ',';
  s += r.term_reason;
  s += ',';
  s += FormatDouble(r.wall_ms);
  return s;
}

ResultRow ParseRow(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto cells = Split(line, ',');
  if (cells.size() != 8) {
    throw Error("result row has " + std::to_string(cells.size()) +
                " columns, expected 8: '" + std::string(line) + "'");
  }
  const auto number = [&](std::string_view cell, const char* column) {
    const auto v = ParseDouble(cell);
    if (!v) {
      throw Error(std::string("bad ") + column + " '" + std::string(cell) +
                  "'");
    }
    return *v;
  };
  const auto integer = [&](std::string_view cell, const char* column) {
    const double v = number(cell, column);
    if (v < 0 || v != std::floor(v)) {
      throw Error(std::string("bad ") + column + " '" + std::string(cell) +
                  "'");
    }
    return v;
  };
  ResultRow r;
  r.experiment = std::string(cells[0]);
  r.strategy = std::string(cells[1]);
  r.seed = static_cast<std::uint64_t>(integer(cells[2], "seed"));
  r.iter = static_cast<int>(integer(cells[3], "iter"));
  r.j_task_sys = number(cells[4], "j_task_sys");
  r.j_sysid = number(cells[5], "j_sysid");
  r.term_reason = std::string(cells[6]);
  r.wall_ms = number(cells[7], "wall_ms");
  return r;
}

std::vector<ResultRow> ReadResults(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error("'" + path + "' does not start with the results header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(ParseRow(line));
  }
  return rows;
}

std::vector<double> SynthesizeNominal(const ExperimentConfig& config) {
  const ControllerBlock& ctl = config.controller;
  const ModelParams nominal = config.Nominal();
  const int n = StateDim(nominal.kind), m = ControlDim(nominal.kind);
  switch (ctl.synthesis) {
    case SynthesisKind::kLqr: {
      const std::vector<double> x_eq(n, 0.0), u_eq(m, 0.0);
      const LinearizedModel lin =
          Linearize(nominal, x_eq, u_eq, config.task.spec.dt);
      Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
      Eigen::MatrixXd R = Eigen::MatrixXd::Identity(m, m);
      for (std::size_t i = 0; i < ctl.lqr.q.size(); ++i) Q(i, i) = ctl.lqr.q[i];
      for (std::size_t i = 0; i < ctl.lqr.r.size(); ++i) R(i, i) = ctl.lqr.r[i];
      try {
        return SynthesizeLqr(lin.A, lin.B, Q, R);
      } catch (const SynthesisError&) {
        throw;
      } catch (const Error& e) {
        throw SynthesisError(std::string("lqr: ") + e.what());
      }
    }
    case SynthesisKind::kMlp:
      return SynthesizeMlpNominal(nominal, config.task.spec, config.Policy(),
                                  ctl.mlp);
    case SynthesisKind::kExplicit:
      return ctl.theta;
  }
  throw SynthesisError("unknown synthesis kind");
}

TuningProblem ProblemForSeed(const ExperimentConfig& config,
                             std::uint64_t seed) {
  TuningProblem p;
  p.nominal = config.Nominal();
  p.tunable = config.Tunable();
  p.policy = config.Policy();
  p.task = config.TaskForSeed(seed);
  return p;
}

std::string ResolveOutputDir(const std::optional<std::string>& flag,
                             const ExperimentConfig& config) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("COTUNE_OUT"); env && *env) return env;
  return config.run.output;
}

void WriteTrajectory(const std::string& path, const Trajectory& traj) {
  const int horizon = static_cast<int>(traj.controls.size());
  std::string s = "# horizon " + std::to_string(horizon) + " dt " +
                  FormatDouble(traj.dt) + " failed " +
                  (traj.failed ? "1" : "0") + "\n";
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    s += FormatDouble(static_cast<double>(t) * traj.dt);
    for (double x : traj.states[t]) s += ' ' + FormatDouble(x);
    if (t < traj.controls.size()) {
      for (double u : traj.controls[t]) s += ' ' + FormatDouble(u);
    }
    s += '\n';
  }
  WriteFile(path, s);
}

Trajectory ReadTrajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory '" + path + "'");
  std::string line;
  Trajectory traj;
  int horizon = -1;
  std::size_t width = 0;
  if (!std::getline(in, line)) throw Error("empty trajectory '" + path + "'");
  {
    std::istringstream head(line);
    std::string hash, k1, dt, k2, k3;
    int failed = 0;
    head >> hash >> k1 >> horizon >> k2 >> dt >> k3 >> failed;
    const auto parsed_dt = ParseDouble(dt);
    if (hash != "#" || k1 != "horizon" || k2 != "dt" || k3 != "failed" ||
        !parsed_dt || !head) {
      throw Error("bad trajectory header in '" + path + "'");
    }
    traj.dt = *parsed_dt;
    traj.failed = failed != 0;
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (std::string_view cell : Split(line, ' ')) {
      const auto v = ParseDouble(cell);
      if (!v) throw Error("bad number in '" + path + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || static_cast<int>(rows.size()) != horizon + 1) {
    throw Error("trajectory '" + path + "' has the wrong number of rows");
  }
  // The last row has only t and the state.
  width = rows.back().size() - 1;
  const std::size_t controls = rows.front().size() - 1 - width;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const bool last = t + 1 == rows.size();
    if (rows[t].size() != 1 + width + (last ? 0 : controls)) {
      throw Error("ragged trajectory '" + path + "'");
    }
    traj.states.emplace_back(rows[t].begin() + 1, rows[t].begin() + 1 + width);
    if (!last) {
      traj.controls.emplace_back(rows[t].begin() + 1 + width, rows[t].end());
    }
  }
  return traj;
}

RunResult RunExperiment(const ExperimentConfig& config,
                        const std::string& out_dir, std::ostream* progress) {
  ValidateConfig(config);
  RunResult result;
  result.out_dir = out_dir;

  std::vector<CellResult> cells;
  for (Strategy s : config.run.strategies) {
    for (std::uint64_t seed : config.run.seeds) {
      CellResult cell;
      cell.strategy = s;
      cell.seed = seed;
      cells.push_back(std::move(cell));
    }
  }

  std::mutex log_mutex;
  const auto log = [&](const std::string& line) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *progress << line << std::endl;
  };

  std::vector<double> theta_nominal;
  std::string synthesis_error;
  try {
    log("synthesizing nominal controller (" +
        std::string(SynthesisKindName(config.controller.synthesis)) + ")");
    theta_nominal = SynthesizeNominal(config);
  } catch (const Error& e) {
    synthesis_error = std::string("nominal synthesis failed: ") + e.what();
    log(synthesis_error);
  }

  const ModelParams truth = config.Truth();
  const auto run_cell = [&](CellResult& cell) {
    const auto start = std::chrono::steady_clock::now();
    if (!synthesis_error.empty()) {
      cell.error = synthesis_error;
      return;
    }
    try {
      System system(truth, config.system.noise_std, config.system.integrator,
                    config.system.seed + cell.seed);
      CountingSystem counted(system);
      TuningConfig cfg = config.tuning;
      cfg.strategy = cell.strategy;
      cfg.seed = cell.seed;
      TuningReport report = RunStrategy(
          counted, ProblemForSeed(config, cell.seed), theta_nominal, cfg);
      if (report.system_rollouts != counted.rollouts()) {
        throw Error("rollout accounting mismatch");
      }
      cell.report.emplace(std::move(report));
    } catch (const Error& e) {
      cell.error = e.what();
    }
    cell.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    std::string line = std::string(StrategyName(cell.strategy)) + " seed " +
                       std::to_string(cell.seed) + ": ";
    if (cell.report) {
      line += "nominal " + FormatDouble(cell.report->j_nominal) + " best " +
              FormatDouble(cell.report->j_best);
    } else {
      line += "error: " + cell.error;
    }
    log(line);
  };

  const int workers = std::max(
      1, std::min<int>(config.run.threads, static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      run_cell(cells[i]);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Single writer, fixed cell order.
  fs::create_directories(out_dir);
  const fs::path root(out_dir);
  std::string csv = std::string(kCsvHeader) + "\n";
  for (const auto& cell : cells) {
    if (!cell.report) ++result.failed_cells;
    for (auto& row : RowsOf(config, cell)) {
      csv += FormatRow(row) + "\n";
      result.rows.push_back(std::move(row));
    }
  }
  WriteFile(root / "results.csv", csv);
  WriteFile(root / "config.yaml", DumpConfig(config));
  if (synthesis_error.empty()) {
    WriteFile(root / "nominal.txt", FormatList(theta_nominal) + "\n");
  }
  fs::create_directories(root / "params");
  for (const auto& cell : cells) {
    if (!cell.report) continue;
    const std::string strategy(StrategyName(cell.strategy));
    const std::string tag = "seed" + std::to_string(cell.seed);
    WriteFile(root / "params" / (strategy + "_" + tag + ".txt"),
              ParamsDump(*cell.report));
    if (!config.run.dump_trajectories) continue;
    const fs::path dir = root / "traj" / strategy;
    fs::create_directories(dir);
    for (const auto& rec : cell.report->iterations) {
      WriteTrajectory(
          (dir / (tag + "_iter" + std::to_string(rec.iteration) + ".txt"))
              .string(),
          rec.sys_traj);
    }
  }
  result.cells = std::move(cells);
  return result;
}

Comparison Compare(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw Error("no result rows to compare");
  Comparison cmp;
  cmp.experiment = rows.front().experiment;

  struct Cell {
    double nominal = kNan;
    double best = std::numeric_limits<double>::infinity();
    bool failed = false;
  };
  std::vector<std::string> order;
  std::map<std::string, std::map<std::uint64_t, Cell>> cells;
  for (const auto& r : rows) {
    if (r.experiment != cmp.experiment) {
      throw Error("mixed experiment ids: '" + cmp.experiment + "' and '" +
                  r.experiment + "'");
    }
    if (!cells.count(r.strategy)) order.push_back(r.strategy);
    Cell& c = cells[r.strategy][r.seed];
    if (r.term_reason.rfind("error", 0) == 0) {
      c.failed = true;
      continue;
    }
    if (r.term_reason == "collect") continue;
    if (r.iter == 0) c.nominal = r.j_task_sys;
    c.best = std::min(c.best, r.j_task_sys);
  }

  for (const auto& name : order) {
    StrategySummary s;
    s.strategy = name;
    std::vector<double> best, nominal, reduction;
    for (const auto& [seed, c] : cells[name]) {
      if (c.failed || std::isnan(c.nominal)) {
        ++s.failed;
        continue;
      }
      ++s.seeds;
      best.push_back(c.best);
      nominal.push_back(c.nominal);
      reduction.push_back(c.nominal > 0 ? (c.nominal - c.best) / c.nominal
                                        : 0.0);
    }
    s.median_best = Quantile(best, 0.5);
    s.q1_best = Quantile(best, 0.25);
    s.q3_best = Quantile(best, 0.75);
    s.median_nominal = Quantile(nominal, 0.5);
    s.median_reduction = Quantile(reduction, 0.5);
    for (const auto& other : order) {
      if (other == name) continue;
      double wins = 0.0;
      int shared = 0;
      for (const auto& [seed, c] : cells[name]) {
        const auto it = cells[other].find(seed);
        if (it == cells[other].end()) continue;
        const Cell& o = it->second;
        if (c.failed || o.failed || std::isnan(c.nominal) ||
            std::isnan(o.nominal)) {
          continue;
        }
        ++shared;
        if (c.best < o.best) {
          wins += 1.0;
        } else if (c.best == o.best) {
          wins += 0.5;
        }
      }
      s.win_rate.emplace_back(other, shared ? wins / shared : kNan);
    }
    cmp.strategies.push_back(std::move(s));
  }
  return cmp;
}

std::string ComparisonCsv(const Comparison& cmp) {
  std::string s =
      "experiment,strategy,seeds,failed,median_best,q1_best,q3_best,"
      "median_nominal,median_reduction";
  for (const auto& st : cmp.strategies) s += ",win_vs_" + st.strategy;
  s += '\n';
  for (const auto& st : cmp.strategies) {
    s += cmp.experiment + ',' + st.strategy + ',' + std::to_string(st.seeds) +
         ',' + std::to_string(st.failed) + ',' + FormatDouble(st.median_best) +
         ',' + FormatDouble(st.q1_best) + ',' + FormatDouble(st.q3_best) +
         ',' + FormatDouble(st.median_nominal) + ',' +
         FormatDouble(st.median_reduction);
    for (const auto& other : cmp.strategies) {
      s += ',';
      for (const auto& [name, rate] : st.win_rate) {
        if (name == other.strategy) s += FormatDouble(rate);
      }
    }
    s += '\n';
  }
  return s;
}

std::string ComparisonTable(const Comparison& cmp) {
  const auto fixed = [](double v, int digits) {
    if (std::isnan(v)) return std::string("-");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  std::vector<std::string> head = {"strategy", "seeds",   "failed",
                                   "median",   "q1",      "q3",
                                   "nominal",  "reduction"};
  for (const auto& st : cmp.strategies) head.push_back("win:" + st.strategy);

  std::vector<std::vector<std::string>> table = {head};
  for (const auto& st : cmp.strategies) {
    std::vector<std::string> row = {
        st.strategy,
        std::to_string(st.seeds),
        std::to_string(st.failed),
        fixed(st.median_best, 5),
        fixed(st.q1_best, 5),
        fixed(st.q3_best, 5),
        fixed(st.median_nominal, 5),
        std::isnan(st.median_reduction)
            ? std::string("-")
            : fixed(100.0 * st.median_reduction, 1) + "%"};
    for (const auto& other : cmp.strategies) {
      std::string cell = "-";
      for (const auto& [name, rate] : st.win_rate) {
        if (name == other.strategy) cell = fixed(rate, 2);
      }
      row.push_back(cell);
    }
    table.push_back(std::move(row));
  }

  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::string s = "experiment " + cmp.experiment +
                  " (medians and IQR of best J_task on the system across "
                  "seeds)\n";
  for (const auto& row : table) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string pad(width[i] - row[i].size(), ' ');
      line += i == 0 ? row[i] + pad : "  " + pad + row[i];
    }
    s += line + '\n';
  }
  return s;
}

Comparison CompareStrategies(const std::string& dir) {
  const fs::path root(dir);
  const Comparison cmp = Compare(ReadResults((root / "results.csv").string()));
  WriteFile(root / "summary.csv", ComparisonCsv(cmp));
  WriteFile(root / "summary.txt", ComparisonTable(cmp));
  return cmp;
}

}  // namespace cotune
