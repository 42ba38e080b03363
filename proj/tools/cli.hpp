#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace imac::cli {

// Runs one `imac` invocation.  args excludes the program name.  Returns the
// process exit code; errors are written to `err` as a JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace imac::cli
