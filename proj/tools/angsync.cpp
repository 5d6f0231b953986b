#include <iostream>

#include "angsync/cli.hpp"

int main(int argc, char** argv) { return angsync::cli::run(argc, argv, std::cout, std::cerr); }
