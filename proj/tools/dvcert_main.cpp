#include <iostream>

#include "dvcert/cli.hpp"

int main(int argc, char** argv) { return dvcert::run_cli(argc, argv, std::cout, std::cerr); }
