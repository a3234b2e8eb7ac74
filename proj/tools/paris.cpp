#include <iostream>

#include "paris/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return paris::cli::run(args, std::cout, std::cerr);
}
