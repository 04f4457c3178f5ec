#pragma once

namespace gmatch {

// Entry point behind the gmatch binary. Returns 0 on success, 1 on runtime
// errors, 2 on usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace gmatch
