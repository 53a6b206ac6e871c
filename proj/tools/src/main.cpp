#include "dmps_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dmps::cli::run(argc, argv, std::cout, std::cerr); }
