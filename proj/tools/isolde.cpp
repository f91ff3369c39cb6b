#include <iostream>
#include <string>
#include <vector>

#include "isolde/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return isolde::cli::run_cli(args, std::cout, std::cerr);
}
