#include <iostream>
#include <vector>

#include "gts/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gts::cli::run(args, std::cout, std::cerr);
}
