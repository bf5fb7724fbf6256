#include <iostream>

#include "kobasin/cli.hpp"

int main(int argc, char** argv) { return kobasin::run_cli(argc, argv, std::cout, std::cerr); }
