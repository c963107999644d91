#pragma once

#include <iosfwd>

namespace optlist::cli {

// Full command-line entry point. Exit codes: 0 success, 2 usage/config,
// 3 validation, 4 incomplete store, 1 anything else.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace optlist::cli
