#include <iostream>
#include <string>
#include <vector>

#include "doe/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return doe::cli::run(args, std::cout, std::cerr);
}
