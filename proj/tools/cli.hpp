#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridfreq::cli {

// Runs one command line (without the program name). Returns the process exit code:
// 0 success, 1 runtime or numerical failure, 2 input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a file.
std::string sha256_file(const std::string& path);

}  // namespace gridfreq::cli
