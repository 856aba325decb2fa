#include <iostream>
#include <string>
#include <vector>

#include "reuserisk/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return reuserisk::cli::run_cli(args, std::cout, std::cerr);
}
