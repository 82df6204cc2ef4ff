#include "qmg/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return qmg::cli::main(argc, argv, std::cout, std::cerr); }
