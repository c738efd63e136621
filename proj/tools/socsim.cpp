#include <iostream>

#include "socsim/cli.hpp"

int main(int argc, char** argv) {
    return socsim::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
