// Full acceptance suite as a ctest target: one pass/fail line per criterion,
// nonzero exit if any non-informational criterion fails.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "spdelab/acceptance.hpp"

int main(int argc, char** argv) {
  spdelab::AcceptanceOptions opt;
  opt.quick = false;
  opt.seed = 20240808;
  if (const char* bin = std::getenv("SPDE_LAB_BIN")) opt.cli_path = bin;
  if (const char* out = std::getenv("SPDE_LAB_ACCEPT_OUT"))
    opt.out_dir = out;
  else
    opt.out_dir = "acceptance_artifacts";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--quick") opt.quick = true;
    if (a == "--seed" && i + 1 < argc) opt.seed = std::strtoull(argv[++i], nullptr, 10);
  }
  const auto results = spdelab::run_acceptance(opt);
  const bool ok = spdelab::all_passed(results);
  std::printf("acceptance: %s\n", ok ? "ALL CRITERIA PASSED" : "FAILURES PRESENT");
  return ok ? 0 : 1;
}
