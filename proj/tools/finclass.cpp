#include <iostream>
#include <string>
#include <vector>

#include "finclass/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return finclass::cli::dispatch(args, std::cout, std::cerr);
}
