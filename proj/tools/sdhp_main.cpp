#include "sdhp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sdhp::cli::run(argc, argv, std::cout, std::cerr); }
