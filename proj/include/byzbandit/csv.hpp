// CSV emission. The per-run schema below is versioned: any change to the
// column set or order must bump kCsvSchemaVersion and the header string
// together (golden-file tests pin the exact bytes).
#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "byzbandit/errors.hpp"
#include "byzbandit/protocol.hpp"

namespace byzbandit {

constexpr int kCsvSchemaVersion = 1;
constexpr const char* kCsvHeader =
    "t,cumulative_regret,episode,lambda_k,beta_k,norm_E_k,norm_e_k,theta_error,"
    "min_eig_Lambda,dp_noise_norm";

// Round-trip exact, locale independent ('.' decimal point always).
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// RFC-4180 quoting, applied only when needed.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// One row per step; episode-level diagnostics repeat within their episode.
// Partial traces (runs aborted by a broadcast error) emit the steps recorded
// so far.
inline void write_run_csv(std::ostream& os, const RegretTrace& trace) {
  os << kCsvHeader << "\n";
  const long el = trace.episode_len;
  for (std::size_t i = 0; i < trace.cum_regret.size(); ++i) {
    const long t = static_cast<long>(i) + 1;
    const std::size_t ep = static_cast<std::size_t>((t - 1) / el);
    if (ep >= trace.per_episode.size()) break;
    const EpisodeDiag& d = trace.per_episode[ep];
    os << t << ',' << format_double(trace.cum_regret[i]) << ',' << d.k << ','
       << format_double(d.lambda) << ',' << format_double(d.beta) << ','
       << format_double(d.norm_e_mat) << ',' << format_double(d.norm_e_vec) << ','
       << format_double(d.theta_error) << ',' << format_double(d.min_eig_lambda) << ','
       << format_double(d.dp_noise_norm) << "\n";
  }
}

inline void write_run_csv_file(const std::string& path, const RegretTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file '" + path + "'");
  write_run_csv(os, trace);
}

struct SummaryRow {
  std::string config_id;
  int repetitions = 0;
  double mean_final_regret = 0.0;
  double std_final_regret = 0.0;
  int failures = 0;
};

constexpr const char* kSummaryHeader =
    "config_id,repetitions,mean_final_regret,std_final_regret,failures";

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file '" + path + "'");
  os << kSummaryHeader << "\n";
  for (const SummaryRow& r : rows) {
    os << csv_field(r.config_id) << ',' << r.repetitions << ','
       << format_double(r.mean_final_regret) << ',' << format_double(r.std_final_regret)
       << ',' << r.failures << "\n";
  }
}

}  // namespace byzbandit
