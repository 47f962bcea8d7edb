#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ocreval::process {

struct Result {
  int exit_code = -1;  // -1 when the child was killed by a signal
  int signal = 0;
  bool timed_out = false;
  std::string out;
  std::string err;
};

// Splits a command line on whitespace, honouring single and double quotes
// and backslash escapes. No shell is involved.
std::vector<std::string> split_command_line(std::string_view line);

// Spawns argv[0] (PATH lookup) with the given arguments, captures stdout and
// stderr, and kills the child after timeout_s seconds. Throws Error if the
// program cannot be started.
Result run(const std::vector<std::string>& argv, double timeout_s);

}  // namespace ocreval::process
