#include <cstdlib>
#include <iostream>

#include "trojanscan_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return trojanscan::cli::run(args, std::cout, std::cerr, std::getenv("TROJANSCAN_SEED"));
}
