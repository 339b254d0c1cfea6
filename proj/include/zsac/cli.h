// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 runtime failure
// (including any failed clip in a batch), 2 usage error.

#pragma once

#include <ostream>

namespace zsac::cli {

int Run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace zsac::cli
