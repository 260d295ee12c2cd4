#include <iostream>

#include "ksjko/cli.hpp"

int main(int argc, char** argv) { return ksjko::cli::run_command(argc, argv, std::cerr); }
