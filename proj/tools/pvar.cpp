#include <iostream>
#include <string>
#include <vector>

#include "pvar/run_config.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pvar::run_cli(args, std::cout, std::cerr);
}
