#include <iostream>

#include "bilnet/cli.hpp"

int main(int argc, char** argv) { return bilnet::run_cli(argc, argv, std::cout, std::cerr); }
