#include <iostream>
#include <string>
#include <vector>

#include "driftmap/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return driftmap::run_cli(args, std::cout, std::cerr);
}
