#include <iostream>

#include "metastab/commands.hpp"

int main(int argc, char** argv) { return metastab::run_cli(argc, argv, std::cout, std::cerr); }
