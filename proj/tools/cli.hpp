#pragma once

#include <istream>
#include <ostream>

namespace datascale::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 2;
inline constexpr int kNotConverged = 3;

// Runs one command line. Output files named "-" (the default) go to `out`;
// corpus commands read "-" from `in`.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace datascale::cli
