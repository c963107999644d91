#include <iostream>

#include "optlist/cli.hpp"

int main(int argc, char** argv) {
  return optlist::cli::run(argc, argv, std::cout, std::cerr);
}
