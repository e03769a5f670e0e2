#include <iostream>

#include "depthpose/cli/commands.hpp"

int main(int argc, char** argv) {
  return depthpose::cli::run(argc, argv, std::cout, std::cerr);
}
