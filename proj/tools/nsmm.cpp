#include <string>
#include <vector>

#include "nsmm/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return nsmm::run_cli(args);
}
