#include <iostream>
#include <string>
#include <vector>

#include "clickmask/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return clickmask::run_cli(args, std::cout, std::cerr);
}
