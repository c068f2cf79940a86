#include <iostream>

#include "lossrobust/cli.hpp"

int main(int argc, char** argv) { return lossrobust::cli::run(argc, argv, std::cout, std::cerr); }
