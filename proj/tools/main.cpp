#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return nl2sql::cli_main(argc, argv, std::cin, std::cout, std::cerr);
}
