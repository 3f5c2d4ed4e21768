// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "kvpilot/cli.hpp"

int main(int argc, char** argv) { return kvpilot::cli_dispatch(argc, argv, std::cout, std::cerr); }
