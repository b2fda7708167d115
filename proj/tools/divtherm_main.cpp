#include <iostream>

#include "divtherm/app/cli.hpp"

int main(int argc, char** argv) { return divtherm::app::run_cli(argc, argv, std::cout, std::cerr); }
