#include <iostream>

#include "hm/cli.hpp"

int main(int argc, char** argv) { return hm::cli::main_entry(argc, argv, std::cout, std::cerr); }
