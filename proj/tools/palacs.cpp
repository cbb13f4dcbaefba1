#include "palacs/cli.hpp"

int main(int argc, char** argv) { return palacs::cli::run_cli(argc, argv); }
