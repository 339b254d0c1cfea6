// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "zsac/cli.h"

int main(int argc, char** argv) {
  return zsac::cli::Run(argc, argv, std::cout, std::cerr);
}
