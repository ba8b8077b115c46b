#pragma once

#include <string>
#include <vector>

namespace clc::cli {

// Exit codes: 0 ok, 2 usage/data error, 3 dictionary hash mismatch,
// 4 malformed bitstream, 1 anything else.
int run(std::vector<std::string> args);

}  // namespace clc::cli
