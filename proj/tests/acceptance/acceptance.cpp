// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run everything
//   acceptance --only N   run criterion N (ctest registers one test per N)
//   acceptance --list     print the criterion names

#include <chrono>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "criteria.hpp"

int main(int argc, char** argv) {
  using sketchreg::acceptance::criteria;
  CLI::App app{"sketchreg acceptance suite"};
  int only = 0;
  bool list = false;
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 12));
  app.add_flag("--list", list, "List criteria and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : criteria()) std::printf("%2d  %s\n", c.id, c.name.c_str());
    return 0;
  }
  bool all_pass = true;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    sketchreg::acceptance::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s (%.1fs): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
