#include <string>
#include <vector>

#include "morkit/bench_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mor::cli_main(args);
}
