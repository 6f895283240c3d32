#include <iostream>

#include "nwpkit/cli.hpp"

int main(int argc, char** argv) {
  return nwpkit::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
