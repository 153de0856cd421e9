#include "ssp/cli/commands.hpp"

int main(int argc, char** argv) { return ssp::cli::run_cli(argc, argv); }
