// Acceptance suite runner: one PASS/FAIL line per criterion, exit status 0
// when every required criterion passes.

#include <iostream>

#include "ftrl_bandits/acceptance.hpp"

int main(int argc, char** argv) {
  ftrl_bandits::acceptance::Options options;
  if (argc > 1) options.output = argv[1];
  return ftrl_bandits::acceptance::run_and_report(options, std::cout);
}
