#include <iostream>

#include "symindex/verify.hpp"

int main() {
    const int fails = symindex::verify::run_all(std::cout);
    std::cout << (fails == 0 ? "all criteria pass" : std::to_string(fails) + " criteria fail") << std::endl;
    return fails == 0 ? 0 : 1;
}
