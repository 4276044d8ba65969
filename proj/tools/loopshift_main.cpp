#include <iostream>

#include "loopshift/cli.hpp"

int main(int argc, char** argv) { return loopshift::cli::main_entry(argc, argv, std::cout, std::cerr); }
