#include <iostream>
#include <string>
#include <vector>

#include "ggcn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ggcn::cli::run(args, std::cout, std::cerr);
}
