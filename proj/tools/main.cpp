#include "propssl/cli.hpp"

int main(int argc, char** argv) { return propssl::cli::run_cli(argc, argv); }
