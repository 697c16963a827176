// Prints one PASS/FAIL line per acceptance criterion, followed by the checks
// of any failing criterion. Exit status 0 only when every criterion passes.
//
//   acceptance            all criteria
//   acceptance 3 7        selected criteria

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>
#include <vector>

#include "hybrid/selfcheck.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (int i = 1; i <= hybrid::selfcheck::criterion_count; ++i) ids.push_back(i);

  hybrid::selfcheck::Options opt;
  opt.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int failed = 0;
  for (int id : ids) {
    try {
      const auto cr = hybrid::selfcheck::criterion(id, opt);
      std::printf("%s criterion %d: %s (%.2f s)\n", cr.pass() ? "PASS" : "FAIL", id, cr.title.c_str(), cr.seconds);
      if (!cr.pass()) {
        ++failed;
        for (const auto& c : cr.checks)
          std::printf("    %s %s | expected %s | actual %s | tolerance %s\n", c.pass ? "ok  " : "FAIL", c.name.c_str(),
                      c.expected.c_str(), c.actual.c_str(), c.tolerance.c_str());
      }
    } catch (const std::exception& e) {
      ++failed;
      std::printf("FAIL criterion %d: %s\n", id, e.what());
    }
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed ? 1 : 0;
}
