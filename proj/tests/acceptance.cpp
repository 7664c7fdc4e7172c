// Runs every acceptance driver on a configuration (default: built-in) and prints one
// verdict line per criterion. Exit status 0 only if all criteria pass.
#include "nf/experiments.hpp"

#include <cstdio>
#include <string>

using namespace nf;

int main(int argc, char** argv) {
  try {
    ExperimentConfig cfg = load_config(argc > 1 ? argv[1] : "default");
    if (argc > 2) cfg.output_dir = argv[2];
    Lab lab(cfg);
    int failed = 0;
    double total = 0;
    for (int c = 1; c <= kCriteria; ++c) {
      const Report r = run_criterion(lab, c);
      save_report(r, cfg, cfg.output_dir);
      total += r.seconds;
      std::string detail;
      for (const Check& ch : r.checks) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s=%.4g%s", detail.empty() ? "" : "; ", ch.name.c_str(), ch.value,
                      ch.pass ? "" : " (FAIL)");
        detail += buf;
      }
      std::printf("criterion %2d %s  %-38s %6.1fs  %s\n", c, r.pass() ? "PASS" : "FAIL", r.title.c_str(), r.seconds,
                  detail.c_str());
      std::fflush(stdout);
      failed += !r.pass();
    }
    std::fprintf(stderr, "%d of %d criteria failed; drivers took %.0f s; reports in %s\n", failed, kCriteria, total,
                 cfg.output_dir.c_str());
    return failed ? 1 : 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
