#include <iostream>

#include "loomata/cli.hpp"

int main(int argc, char** argv) {
  return loomata::run_cli(argc, argv, std::cout, std::cerr);
}
