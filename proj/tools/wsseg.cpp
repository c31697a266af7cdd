#include <iostream>

#include "wsseg/cli.hpp"

int main(int argc, char** argv) { return wsseg::run_cli(argc, argv, std::cout, std::cerr); }
