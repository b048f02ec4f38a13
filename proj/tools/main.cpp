#include <iostream>

#include "gmlpnp/cli.hpp"

int main(int argc, char** argv) { return gmlpnp::cli::run(argc, argv, std::cout, std::cerr); }
