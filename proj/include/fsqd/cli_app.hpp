#pragma once

namespace fsqd {

// Entry point shared by the installed binary and in-process CLI tests.
// Exit codes: 0 success, 2 invalid input/config, 3 numerical failure,
// 4 I/O failure, 1 unexpected error.
int run_cli(int argc, const char* const* argv);

}  // namespace fsqd
