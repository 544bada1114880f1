#include <iostream>

#include "histent/cli.hpp"

int main(int argc, char** argv) { return histent::run_cli(argc, argv, std::cout, std::cerr); }
