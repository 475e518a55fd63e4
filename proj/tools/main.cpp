#include <iostream>

#include "rrn/cli.hpp"

int main(int argc, char** argv) { return rrn::cli::dispatch(argc, argv, std::cout, std::cerr); }
