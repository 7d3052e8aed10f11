#include <iostream>
#include <string>
#include <vector>

#include "qrke/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qrke::cli::run(args, std::cout, std::cerr);
}
