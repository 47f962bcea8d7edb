#include <iostream>

#include "ocreval/cli.hpp"

int main(int argc, char** argv) { return ocreval::cli::run_cli(argc, argv, std::cout, std::cerr); }
