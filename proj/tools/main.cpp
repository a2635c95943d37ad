#include <iostream>
#include <string>
#include <vector>

#include "piecy/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return piecy::cli::run(args, std::cout, std::cerr);
}
