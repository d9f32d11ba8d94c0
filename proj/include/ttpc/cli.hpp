#pragma once

namespace ttpc::cli {

// Exit codes: 0 success, 2 validation error, 3 provider/runtime error.
int run(int argc, const char* const* argv);

}  // namespace ttpc::cli
