#include <iostream>

#include "rfhydro/commands.hpp"

int main(int argc, char** argv) { return rfhydro::run_cli(argc, argv, std::cout, std::cerr); }
