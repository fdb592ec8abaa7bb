#include <iostream>

#include "robustagg/cli.hpp"

int main(int argc, char** argv) { return robustagg::cli::run(argc, argv, std::cout, std::cerr); }
