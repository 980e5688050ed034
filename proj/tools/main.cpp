#include <iostream>
#include <string>
#include <vector>

#include "lactodyn/cli/commands.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return lactodyn::cli::run(args, std::cout, std::cerr);
}
