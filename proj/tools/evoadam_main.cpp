#include <string>
#include <vector>

#include "evoadam/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return evoadam::run_command(args);
}
