#include <iostream>

#include "spocc/commands.hpp"

int main(int argc, char** argv) { return spocc::cli::run(argc, argv, std::cout, std::cerr); }
