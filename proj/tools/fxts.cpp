#include "fxts/cli/commands.hpp"

int main(int argc, char** argv) { return fxts::cli::run_command(argc, argv); }
