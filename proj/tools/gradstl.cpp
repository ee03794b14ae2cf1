#include <iostream>

#include "gradstl/cli.hpp"

int main(int argc, char** argv) {
  return gradstl::cli::run(argc, argv, std::cout, std::cerr);
}
