#include "aoisim/cli.hpp"

int main(int argc, char** argv) { return aoisim::run_cli(argc, argv); }
