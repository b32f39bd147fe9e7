#include <iostream>

#include "divrec/cli.hpp"

int main(int argc, char** argv) { return divrec::cli::run(argc, argv, std::cout, std::cerr); }
