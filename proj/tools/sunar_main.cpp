#include <iostream>

#include "sunar/cli.hpp"

int main(int argc, char** argv) {
    return sunar::cli::run(argc, argv, std::cout, std::cerr);
}
