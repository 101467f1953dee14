#include "sievekit/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return sievekit::cli::main_entry({argv + 1, argv + argc}, std::cout, std::cerr);
}
