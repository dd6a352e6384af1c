#pragma once

#include <string>
#include <vector>

namespace semcrypt::cli {

// Entry point shared by the semcrypt binary and the in-process CLI tests.
// Returns the process exit code; never throws.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace semcrypt::cli
