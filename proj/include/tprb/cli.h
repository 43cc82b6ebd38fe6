#pragma once

namespace tprb {

// Exit codes: 0 success, 1 usage error, 2 runtime error.
int cli_main(int argc, char **argv);

}  // namespace tprb
