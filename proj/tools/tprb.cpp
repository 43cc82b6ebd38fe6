#include "tprb/cli.h"

int main(int argc, char **argv) { return tprb::cli_main(argc, argv); }
