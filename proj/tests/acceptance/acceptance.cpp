#include <cstring>
#include <iostream>

#include "cpboost/testing/checks.hpp"

int main(int argc, char** argv) {
    bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    int failures = cpboost::check::run_all(std::cout, quick);
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failures ? 1 : 0;
}
