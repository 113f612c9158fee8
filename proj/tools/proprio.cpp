#include <iostream>

#include "proprio/commands.hpp"

int main(int argc, char** argv) { return proprio::cli::run(argc, argv, std::cout, std::cerr); }
