#include <iostream>
#include <string>
#include <vector>

#include "mp4bag/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mp4bag::run_cli(args, std::cout, std::cerr);
}
