#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddghash::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

// Output schema version for --format json.
inline constexpr int kSchemaVersion = 1;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddghash::cli
