#include <iostream>
#include <string>
#include <vector>

#include "sv6d/commands.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sv6d::cli::run(args, std::cout, std::cerr);
}
