#include <cstring>
#include <iostream>

#include "acceptance_suite.hpp"

int main(int argc, char** argv) {
  bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  return cellfree::run_acceptance(std::cout, quick);
}
