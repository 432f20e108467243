#include <cstdio>

#include "deepctr/deepctr.hpp"

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::puts("deepctr");
  return 0;
}
