#include <iostream>
#include <string>
#include <vector>

#include "herit/cli.hpp"

int main(int argc, char** argv)
{
    herit::configure_logging();
    std::vector<std::string> args(argv + 1, argv + argc);
    return herit::run_cli(args, std::cout, std::cerr);
}
