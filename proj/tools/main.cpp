#include <iostream>

#include "platelab/cli.hpp"

int main(int argc, char** argv) { return platelab::cli::run(argc, argv, std::cout, std::cerr); }
