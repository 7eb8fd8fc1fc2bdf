#include <iostream>

#include "kmcf/cli.hpp"

int main(int argc, char** argv) { return kmcf::cli::run(argc, argv, std::cout, std::cerr); }
