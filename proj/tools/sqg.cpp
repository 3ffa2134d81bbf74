#include "sqg/cli/cli.hpp"

int main(int argc, char** argv) { return sqg::cli::run_command(argc, argv); }
