// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hyperg::run_cli(argc, argv, std::cout, std::cerr); }
