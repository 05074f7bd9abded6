#include <iostream>

#include "fhmm/cli/commands.hpp"

int main(int argc, char** argv) { return fhmm::cli::run(argc, argv, std::cout, std::cerr); }
