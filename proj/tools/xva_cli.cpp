#include "xva/runner.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return xva::cli_main(argc, argv, std::cout, std::cerr);
}
