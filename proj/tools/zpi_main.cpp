#include <iostream>

#include "zpi/cli.hpp"

int main(int argc, char** argv) { return zpi::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr); }
