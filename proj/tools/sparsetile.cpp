#include <iostream>

#include "sparsetile/cli.hpp"

int main(int argc, char** argv) { return sparsetile::cli_main(argc, argv, std::cout, std::cerr); }
