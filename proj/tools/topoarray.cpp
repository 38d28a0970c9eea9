#include <iostream>

#include "topoarray/cli.hpp"

int main(int argc, char** argv) { return topo::cli::main_entry(argc, argv, std::cout, std::cerr); }
