#pragma once

#include <iosfwd>

namespace nl2sql {

// Entry point of the nl2sql command-line tool. Returns the process exit code:
// 0 success, 1 configuration or usage error, 2 mismatches under `eval --strict`.
int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err);

}  // namespace nl2sql
