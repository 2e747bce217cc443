#include <iostream>
#include <string>
#include <vector>

#include "simulpipe/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  const std::vector<std::string> args(argv, argv + argc);
  return simulpipe::run_cli(args, std::cin, std::cout, std::cerr);
}
