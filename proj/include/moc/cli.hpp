#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moc::cli {

/// Entry point of the `moc` tool. `args` excludes the program name.
/// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace moc::cli
