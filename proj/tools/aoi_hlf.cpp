#include <iostream>

#include "aoi_hlf/cli/app.hpp"

int main(int argc, char** argv)
{
    return aoi_hlf::cli::run(argc, argv, std::cout, std::cerr);
}
