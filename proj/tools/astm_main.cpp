#include <string>
#include <vector>

#include "astm/harness.hpp"

int main(int argc, char** argv) {
  return astm::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
