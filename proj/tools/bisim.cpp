#include "bisim/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv, argv + argc);
    const auto report = bisim::cli::run(args);
    (report.status == 0 || report.status == 1 ? std::cout : std::cerr) << report.output;
    return report.status;
}
