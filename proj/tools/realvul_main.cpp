#include <iostream>

#include "realvul/cli.hpp"

int main(int argc, char** argv) { return realvul::cli::run_cli(argc, argv, std::cout, std::cerr); }
