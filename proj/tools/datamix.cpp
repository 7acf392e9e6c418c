#include <iostream>

#include "datamix/cli/app.hpp"

int main(int argc, char** argv) { return datamix::cli::run_cli(argc, argv, std::cout, std::cerr); }
