#include "collide/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return collide::run_cli(argc, argv, std::cout, std::cerr);
}
