#include <iostream>
#include <string>
#include <vector>

#include "lmfrank/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return lmfrank::run_cli(args, std::cout, std::cerr);
}
