#pragma once

// CLI entry points. The binary in tools/ is a thin wrapper around cli_main so
// tests can drive commands in-process and compare artifacts byte-for-byte.
//
// Subcommands:
//   verify <suite>  suites: prop1, gronwall, corollary, conversions, all
//   sample          endpoints.csv + trajectories.jsonl
//   sweep           pool.csv, pool.json, sweep.svg
//   bench           bench.csv
// Common flags: --config, --seed, --out, --workers (env overrides GPC_SEED,
// GPC_WORKERS). Every run writes manifest.json (config hash + inline config +
// seed + versions + argv) sufficient to reproduce it.
//
// Exit codes: 0 success, 1 invariant failure, 2 configuration error.

#include <string>
#include <vector>

#include "gpc/config.hpp"

namespace gpc {

inline constexpr const char* kVersion = "0.1.0";

int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

// Structured check row shared by the verify suites and their JSON report.
struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct VerifyReport {
  std::string suite;
  bool passed = true;
  std::vector<VerifyCheck> checks;
};

// The verify suites as library calls (the acceptance tests reuse them).
VerifyReport verify_prop1(const ExperimentConfig& config);
VerifyReport verify_gronwall(const ExperimentConfig& config);
VerifyReport verify_corollary(const ExperimentConfig& config);
VerifyReport verify_conversions(const ExperimentConfig& config);
VerifyReport run_verify_suite(const std::string& suite, const ExperimentConfig& config);

std::string verify_report_json(const VerifyReport& report);

}  // namespace gpc
