#include <iostream>

#include "sketchreg/cli/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return sketchreg::cli::run(argc, argv);
}
