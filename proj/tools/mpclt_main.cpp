// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mpclt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> env;
  if (const char* w = std::getenv("MPCLT_WORKERS")) env = w;
  return mpclt::run_cli(args, env, std::cout, std::cerr);
}
