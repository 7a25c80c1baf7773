#include <string>
#include <vector>

#include "dbalign/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dbalign::run_cli(args);
}
