#include "latecomer/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return latecomer::cli::run(argc, argv, std::cout, std::cerr); }
