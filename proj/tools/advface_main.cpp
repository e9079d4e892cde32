#include <iostream>

#include "advface/cli.hpp"

int main(int argc, char** argv) {
  return advface::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
