// Experiment orchestration behind the CLI: single-config runs with one CSV
// per repetition, sweeps over config axes with a shared summary, and the
// oracle-check battery. Exit codes: 0 success, 1 configuration error,
// 2 runtime error (partial traces are still flushed), 3 failed invariant
// battery.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "byzbandit/config.hpp"
#include "byzbandit/csv.hpp"
#include "byzbandit/oracle_check.hpp"
#include "byzbandit/protocol.hpp"

namespace byzbandit {

inline std::uint64_t repetition_seed(std::uint64_t base, int rep) {
  return derive_seed(base, {stream::kRepetition, static_cast<std::uint64_t>(rep)});
}

namespace harnessdetail {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline std::string rep_filename(int rep) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rep_%03d.csv", rep);
  return buf;
}

}  // namespace harnessdetail

struct ConfigRunOutcome {
  SummaryRow summary;
  int exit_code = 0;
  std::vector<std::string> errors;
};

// Runs every repetition of one resolved config, writing rep_NNN.csv files,
// the effective-config echo and a one-row summary.csv into `dir`.
// Repetitions are independent; jobs > 1 runs them on a thread pool. All
// aggregation happens in repetition order afterwards, so the summary is
// identical regardless of jobs.
inline ConfigRunOutcome execute_config(const ResolvedExperiment& exp, const std::string& dir,
                                       int jobs = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream echo(dir + "/effective_config.json", std::ios::binary);
    if (!echo) throw ConfigError("cannot write to output directory '" + dir + "'");
    echo << exp.effective.dump(2) << "\n";
  }

  struct RepOutcome {
    double final_regret = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    std::string error;
  };
  std::vector<RepOutcome> reps(static_cast<std::size_t>(exp.repetitions));
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int rep = next.fetch_add(1);
      if (rep >= exp.repetitions) return;
      RepOutcome& slot = reps[static_cast<std::size_t>(rep)];
      try {
        RunConfig rc = exp.run;
        rc.seed = repetition_seed(exp.seed, rep);
        const RunResult res = run_experiment(rc);
        write_run_csv_file(dir + "/" + harnessdetail::rep_filename(rep), res.trace);
        if (res.error) {
          slot.failed = true;
          slot.error = "rep " + std::to_string(rep) + " (episode " +
                       std::to_string(res.error->episode) + "): " + res.error->message;
        } else if (!res.trace.cum_regret.empty()) {
          slot.final_regret = res.trace.cum_regret.back();
        }
      } catch (const std::exception& e) {
        slot.failed = true;
        slot.error = "rep " + std::to_string(rep) + ": " + e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  ConfigRunOutcome out;
  std::vector<double> finals;
  int failures = 0;
  for (const RepOutcome& r : reps) {
    if (r.failed) {
      ++failures;
      out.exit_code = 2;
      out.errors.push_back(r.error);
    } else if (!std::isnan(r.final_regret)) {
      finals.push_back(r.final_regret);
    }
  }
  out.summary = SummaryRow{exp.name, exp.repetitions, harnessdetail::mean_of(finals),
                           harnessdetail::sample_std(finals), failures};
  write_summary_csv(dir + "/summary.csv", {out.summary});
  return out;
}

inline int cli_run(const std::string& config_path, const std::vector<std::string>& overrides,
                   const std::string& out_override, int jobs = 1) {
  ResolvedExperiment exp;
  try {
    exp = load_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  const std::string dir = out_override.empty() ? exp.output_dir : out_override;
  ConfigRunOutcome outcome;
  try {
    outcome = execute_config(exp, dir, jobs);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  for (const std::string& err : outcome.errors) std::cerr << "runtime error: " << err << "\n";
  std::cout << "config " << exp.name << ": " << exp.repetitions << " repetition(s), "
            << outcome.summary.failures << " failure(s), mean final regret "
            << format_double(outcome.summary.mean_final_regret) << "\n"
            << "outputs in " << dir << "\n";
  return outcome.exit_code;
}

namespace harnessdetail {

// Assigns `value` at a dotted path, creating intermediate objects.
inline void set_path(Json& doc, const std::string& path, const Json& value) {
  Json* node = &doc;
  std::string part;
  std::istringstream keys(path);
  std::vector<std::string> parts;
  while (std::getline(keys, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  (*node)[parts.back()] = value;
}

struct SweepCell {
  std::string id;
  Json doc;
};

}  // namespace harnessdetail

inline int cli_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& out_override, int jobs) {
  namespace hd = harnessdetail;
  Json doc;
  std::string base_name;
  std::vector<std::string> axis_paths;
  std::vector<std::vector<Json>> axis_values;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
    doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file is not valid JSON");
    for (const std::string& o : overrides) apply_override(doc, o);
    if (!doc.contains("axes")) throw ConfigError("sweep config needs an 'axes' section");
    const Json axes = doc["axes"];
    doc.erase("axes");
    if (!axes.is_object() || axes.empty()) {
      throw ConfigError("'axes' must be a non-empty object of path -> value list");
    }
    for (const auto& item : axes.items()) {
      if (!item.value().is_array() || item.value().empty()) {
        throw ConfigError("axis '" + item.key() + "' must be a non-empty array");
      }
      axis_paths.push_back(item.key());
      axis_values.push_back(std::vector<Json>(item.value().begin(), item.value().end()));
    }
    base_name = doc.value("name", std::string("sweep"));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  // Cross product in odometer order (last axis fastest).
  std::vector<hd::SweepCell> cells;
  std::vector<std::size_t> counter(axis_paths.size(), 0);
  bool done = false;
  while (!done) {
    hd::SweepCell cell;
    cell.doc = doc;
    cell.id = base_name;
    for (std::size_t a = 0; a < axis_paths.size(); ++a) {
      const Json& value = axis_values[a][counter[a]];
      hd::set_path(cell.doc, axis_paths[a], value);
      cell.id += ";" + axis_paths[a] + "=" +
                 (value.is_string() ? value.get<std::string>() : value.dump());
    }
    cell.doc["name"] = cell.id;
    cells.push_back(std::move(cell));
    done = true;
    for (std::size_t a = axis_paths.size(); a > 0;) {
      --a;
      if (++counter[a] < axis_values[a].size()) {
        done = false;
        break;
      }
      counter[a] = 0;
    }
  }

  std::string out_root = out_override;
  if (out_root.empty()) {
    out_root = doc.contains("output") && doc["output"].contains("dir")
                   ? doc["output"]["dir"].get<std::string>()
                   : std::string("out");
  }
  std::filesystem::create_directories(out_root);

  std::vector<SummaryRow> rows(cells.size());
  std::vector<int> codes(cells.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      char sub[32];
      std::snprintf(sub, sizeof(sub), "cell_%03zu", i);
      const std::string dir = out_root + "/" + sub;
      try {
        ResolvedExperiment exp = resolve_config(cells[i].doc);
        exp.name = cells[i].id;
        const ConfigRunOutcome outcome = execute_config(exp, dir);
        rows[i] = outcome.summary;
        codes[i] = outcome.exit_code;
      } catch (const std::exception& e) {
        const int reps = cells[i].doc.value("repetitions", 0);
        rows[i] = SummaryRow{cells[i].id, reps, std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::quiet_NaN(), std::max(reps, 1)};
        codes[i] = 1;
        std::cerr << "cell " << cells[i].id << " failed: " << e.what() << "\n";
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  write_summary_csv(out_root + "/summary.csv", rows);
  int exit_code = 0;
  for (int c : codes) {
    if (c != 0) exit_code = 2;
  }
  std::cout << cells.size() << " sweep cell(s) completed, summary in " << out_root
            << "/summary.csv\n";
  return exit_code;
}

inline int cli_oracle_check(int trials, bool inject_bug) {
  const std::vector<CheckResult> results = run_oracle_checks(trials, inject_bug);
  bool all = true;
  for (const CheckResult& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << " (" << r.detail << ")\n";
    all = all && r.pass;
  }
  return all ? 0 : 3;
}

}  // namespace byzbandit
