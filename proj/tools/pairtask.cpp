#include <iostream>

#include "pairtask/cli.hpp"

int main(int argc, char** argv) {
  return pairtask::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
