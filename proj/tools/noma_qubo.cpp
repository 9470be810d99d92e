#include <string>
#include <vector>

#include "nomaq/cli.hpp"

int main(int argc, char** argv) {
  return nomaq::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
