#include <string>
#include <vector>

#include "viewfusion/runner.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return viewfusion::run_cli(args);
}
