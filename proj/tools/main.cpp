#include <iostream>
#include <string>
#include <vector>

#include "cogload/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cogload::run_cli(args, std::cout, std::cerr);
}
