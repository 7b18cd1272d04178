#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spdelab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool informational = false;  // quick mode: reduced-size statistical runs
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  bool quick = false;
  std::string out_dir;       // artifacts land here ("" = no artifacts)
  std::uint64_t seed = 20240808;
  int threads = 0;           // 0 = env/hardware
  std::string cli_path;      // for the determinism criterion; "" skips it
};

// Runs the full acceptance suite (criteria 1-13), printing one pass/fail line
// per criterion to stdout. Returns the per-criterion results.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace spdelab
