#include <iostream>

#include "flowclass/cli.hpp"

int main(int argc, char** argv) { return flowclass::run_cli(argc, argv, std::cout, std::cerr); }
