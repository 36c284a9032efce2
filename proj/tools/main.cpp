#include <iostream>

#include "okgc/cli.hpp"

int main(int argc, char** argv) {
  return okgc::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
